//! Independent oracles shared by the integration suites.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, VecDeque};

use pid_core::{DetectConfig, NetworkSpec, TerminalDeath, WeightMatrix};
use rand::Rng;

/// Dense random layered network with a mix of exact ties and zeros.
pub fn random_net<R: Rng>(rng: &mut R, widths: &[usize]) -> NetworkSpec {
    let grid = [0.25, 0.5, 0.75, 1.0];
    loop {
        let layers: Vec<WeightMatrix> = widths
            .windows(2)
            .map(|w| {
                let data = (0..w[0] * w[1])
                    .map(|_| match rng.random_range(0..10) {
                        0 => 0.0,
                        1..=3 => grid[rng.random_range(0..grid.len())] * sign(rng),
                        _ => rng.random_range(-1.0..1.0),
                    })
                    .collect();
                WeightMatrix::new(w[0], w[1], data).unwrap()
            })
            .collect();
        if let Ok(net) = NetworkSpec::new(layers) {
            return net;
        }
    }
}

fn sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

pub fn random_widths<R: Rng>(rng: &mut R, max_layers: usize, max_units: usize) -> Vec<usize> {
    let depth = rng.random_range(1..=max_layers);
    (0..=depth)
        .map(|_| rng.random_range(1..=max_units))
        .collect()
}

/// `phi[k][i][j]` for weight layer `k + 1`, computed from the raw weights.
pub fn strengths(net: &NetworkSpec) -> Vec<Vec<Vec<f64>>> {
    let w_max = net
        .layers()
        .iter()
        .flat_map(|w| w.data().iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    net.layers()
        .iter()
        .map(|w| {
            (0..w.rows())
                .map(|i| {
                    (0..w.cols())
                        .map(|j| ((w.get(i, j).abs() / w_max) as f32) as f64)
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Distinct strengths `>= eta`, descending.
pub fn distinct_thresholds(phi: &[Vec<Vec<f64>>], eta: f64) -> Vec<f64> {
    let mut t: Vec<f64> = phi
        .iter()
        .flatten()
        .flatten()
        .copied()
        .filter(|&v| v >= eta)
        .collect();
    t.sort_by(|a, b| b.total_cmp(a));
    t.dedup();
    t
}

fn active(phi: &[Vec<Vec<f64>>], k: usize, i: usize, j: usize, lambda: f64, eta: f64) -> bool {
    let v = phi[k][i][j];
    v >= eta && v >= lambda
}

/// Nodes reachable by BFS from `(layer, unit)`, forward or backward.
fn bfs(
    phi: &[Vec<Vec<f64>>],
    widths: &[usize],
    start: (usize, usize),
    forward: bool,
    lambda: f64,
    eta: f64,
) -> Vec<Vec<bool>> {
    let mut seen: Vec<Vec<bool>> = widths.iter().map(|&w| vec![false; w]).collect();
    let mut queue = VecDeque::from([start]);
    seen[start.0][start.1] = true;
    while let Some((l, u)) = queue.pop_front() {
        if forward && l + 1 < widths.len() {
            for v in 0..widths[l + 1] {
                if !seen[l + 1][v] && active(phi, l, u, v, lambda, eta) {
                    seen[l + 1][v] = true;
                    queue.push_back((l + 1, v));
                }
            }
        }
        if !forward && l > 0 {
            for v in 0..widths[l - 1] {
                if !seen[l - 1][v] && active(phi, l - 1, v, u, lambda, eta) {
                    seen[l - 1][v] = true;
                    queue.push_back((l - 1, v));
                }
            }
        }
    }
    seen
}

/// `(down, up)`: `down[r][i]` iff feature `i` reaches unit `r` of `layer`;
/// `up[o][r]` iff unit `r` reaches output `o`.
pub fn bfs_reachability(
    phi: &[Vec<Vec<f64>>],
    widths: &[usize],
    lambda: f64,
    eta: f64,
    layer: usize,
) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    let d = widths[0];
    let depth = widths.len() - 1;
    let mut down = vec![vec![false; d]; widths[layer]];
    for i in 0..d {
        let seen = bfs(phi, widths, (0, i), true, lambda, eta);
        for (r, row) in down.iter_mut().enumerate() {
            row[i] = seen[layer][r];
        }
    }
    let mut up = vec![vec![false; widths[layer]]; widths[depth]];
    for (o, row) in up.iter_mut().enumerate() {
        let seen = bfs(phi, widths, (depth, o), false, lambda, eta);
        row.copy_from_slice(&seen[layer]);
    }
    (down, up)
}

/// Ledger re-derived from scratch at every threshold: connectivity comes from
/// BFS, and a unit's candidate changes whenever its reachable feature set
/// differs from the previous threshold's while it reaches an output.
pub fn simulate_ledger(net: &NetworkSpec, cfg: &DetectConfig) -> BTreeMap<Vec<usize>, f64> {
    let phi = strengths(net);
    let widths = net.widths();
    let thresholds = distinct_thresholds(&phi, cfg.eta);
    let units = widths[cfg.layer];
    let mut alive: Vec<Option<(Vec<usize>, f64)>> = vec![None; units];
    let mut parts: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    let mut emit = |set: Vec<usize>, birth: f64, death: f64| {
        if set.len() < 2 && !cfg.keep_singletons {
            return;
        }
        let x = (birth - death).abs();
        let c = if cfg.p.fract() == 0.0 {
            x.powi(cfg.p as i32)
        } else {
            x.powf(cfg.p)
        };
        if c > 0.0 {
            parts.entry(set).or_default().push(c);
        }
    };
    for &lambda in &thresholds {
        let (down, up) = bfs_reachability(&phi, &widths, lambda, cfg.eta, cfg.layer);
        for r in 0..units {
            let feats: Vec<usize> = (0..widths[0]).filter(|&i| down[r][i]).collect();
            let connected = up.iter().any(|row| row[r]);
            if !connected || feats.is_empty() {
                continue;
            }
            match alive[r].take() {
                Some((set, birth)) if set == feats => alive[r] = Some((set, birth)),
                Some((set, birth)) => {
                    emit(set, birth, lambda);
                    alive[r] = Some((feats, lambda));
                }
                None => alive[r] = Some((feats, lambda)),
            }
        }
    }
    let terminal = match cfg.terminal {
        TerminalDeath::LastThreshold => *thresholds.last().unwrap(),
        TerminalDeath::Zero => 0.0,
    };
    for (set, birth) in alive.into_iter().flatten() {
        emit(set, birth, terminal);
    }
    parts
        .into_iter()
        .filter_map(|(k, mut v)| {
            v.sort_by(f64::total_cmp);
            let s: f64 = v.iter().sum();
            (s > 0.0).then_some((k, s))
        })
        .collect()
}

pub fn ledger_map(ledger: &pid_core::PersistenceLedger) -> BTreeMap<Vec<usize>, f64> {
    ledger
        .iter()
        .map(|(c, &s)| (c.features().to_vec(), s))
        .collect()
}

/// Ledgers as `(features, strength bits)`, for bit-exact comparison.
pub fn ledger_bits(ledger: &pid_core::PersistenceLedger) -> Vec<(Vec<usize>, u64)> {
    ledger
        .iter()
        .map(|(c, &s)| (c.features().to_vec(), s.to_bits()))
        .collect()
}

/// Applies a permutation to the units of hidden layer `h` (1-based).
pub fn permute_hidden(net: &NetworkSpec, h: usize, perm: &[usize]) -> NetworkSpec {
    let mut layers: Vec<WeightMatrix> = net.layers().to_vec();
    let incoming = &net.layers()[h - 1];
    let outgoing = &net.layers()[h];
    let mut a = WeightMatrix::zeros(incoming.rows(), incoming.cols());
    for i in 0..incoming.rows() {
        for (new, &old) in perm.iter().enumerate() {
            a.set(i, new, incoming.get(i, old));
        }
    }
    let mut b = WeightMatrix::zeros(outgoing.rows(), outgoing.cols());
    for (new, &old) in perm.iter().enumerate() {
        for j in 0..outgoing.cols() {
            b.set(new, j, outgoing.get(old, j));
        }
    }
    layers[h - 1] = a;
    layers[h] = b;
    NetworkSpec::new(layers).unwrap()
}

/// Direct (cross-correlation) convolution, channel-major in and out.
pub fn direct_conv(
    x: &[f64],
    (c_in, h, w): (usize, usize, usize),
    kernel: &[f64],
    (c_out, kh, kw): (usize, usize, usize),
    stride: usize,
) -> Vec<f64> {
    let ho = (h - kh) / stride + 1;
    let wo = (w - kw) / stride + 1;
    let mut out = vec![0.0; c_out * ho * wo];
    for co in 0..c_out {
        for oy in 0..ho {
            for ox in 0..wo {
                let mut acc = 0.0;
                for ci in 0..c_in {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let k = kernel[((co * c_in + ci) * kh + ky) * kw + kx];
                            acc += k * x[(ci * h + oy * stride + ky) * w + ox * stride + kx];
                        }
                    }
                }
                out[(co * ho + oy) * wo + ox] = acc;
            }
        }
    }
    out
}

/// Weights `w'_k = (16 - k) / 16` of the worked 4-2-1 example. Features
/// x1..x4 are indices 0..3; hidden units h1, h2 are 0, 1.
pub fn worked_example() -> NetworkSpec {
    let w = |k: u32| (16 - k) as f64 / 16.0;
    let first = WeightMatrix::from_rows(&[
        vec![w(1), w(7)],
        vec![w(3), w(9)],
        vec![w(6), w(5)],
        vec![w(8), w(4)],
    ])
    .unwrap();
    let second = WeightMatrix::from_rows(&[vec![w(0)], vec![w(2)]]).unwrap();
    NetworkSpec::new(vec![first, second]).unwrap()
}
