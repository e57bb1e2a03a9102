//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line; the criteria run one at a time so timings are honest.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use ndarray::{Array1, Array2};
use pid_core::bench::{
    gen_synthetic, run_experiment, run_perturbation, ExperimentConfig, ExperimentReport,
    ALL_FUNCTIONS,
};
use pid_core::model::{flatten_conv, forward_activations, ConvKernel, ConvParams, InputShape};
use pid_core::pid::neuron_traces;
use pid_core::trainer::Mlp;
use pid_core::{
    build_filtration, detect, masks_at, train_mlp, DetectConfig, InteractionCandidate, NetworkSpec,
    TerminalDeath, TrainConfig, WeightMatrix,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes past the harness capture so the line shows in every run.
fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[acceptance {id}] {verdict} {name}: {detail}\n");
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn bools(m: &pid_core::filtration::BoolMatrix) -> Vec<Vec<bool>> {
    (0..m.num_rows())
        .map(|i| (0..m.num_cols()).map(|j| m.get(i, j)).collect())
        .collect()
}

#[test]
fn c1_connectivity_matches_bfs() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checks, mut mismatches) = (0usize, 0usize);
    for _ in 0..500 {
        let widths = common::random_widths(&mut rng, 6, 12);
        let net = common::random_net(&mut rng, &widths);
        let filt = build_filtration(&net, 0.0).unwrap();
        let phi = common::strengths(&net);
        for layer in 1..=net.depth() {
            for &lambda in filt.thresholds() {
                let view = masks_at(&filt, lambda, layer).unwrap();
                let (down, up) = common::bfs_reachability(&phi, &widths, lambda, 0.0, layer);
                checks += 1;
                if bools(&view.down) != down || bools(&view.up) != up {
                    mismatches += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches == 0 && secs < 30.0;
    report(
        1,
        "connectivity oracle",
        pass,
        &format!("500 nets, {checks} (layer, threshold) checks, {mismatches} mismatches, {secs:.1} s (limit 30 s)"),
    );
    assert!(pass);
}

#[test]
fn c2_worked_example_persistence() {
    let _g = serial();
    let net = common::worked_example();
    let w = |k: u32| (16 - k) as f64 / 16.0;
    let cfg = DetectConfig::default();
    let ledger = detect(&net, &cfg).unwrap();
    let pair = ledger.strength(&InteractionCandidate::new(vec![0, 1]));
    let expected = (w(3) - w(6)).abs().powi(2);

    let filt = build_filtration(&net, 0.0).unwrap();
    let traces = neuron_traces(&filt, &cfg).unwrap();
    let h1 = &traces[0].lifetimes;
    let pair_life = h1.iter().find(|l| l.features.features() == [0, 1]);
    let triple_life = h1.iter().find(|l| l.features.features() == [0, 1, 2]);
    let chain_ok = pair_life.is_some_and(|l| l.birth == w(3) && l.death == w(6))
        && triple_life.is_some_and(|l| l.birth == w(6));
    let pass = pair == Some(expected) && chain_ok;
    report(
        2,
        "worked 4-2-1 example",
        pass,
        &format!(
            "strength({{x1,x2}}) = {pair:?} (expected {expected}), h1 lifetimes {:?}",
            h1.iter()
                .map(|l| (l.features.features().to_vec(), l.birth, l.death))
                .collect::<Vec<_>>()
        ),
    );
    assert!(pass);
}

/// Per-function PID means from the reference AUC table at L1 = 5e-5.
const REFERENCE_AUC: [f64; 10] = [0.986, 0.804, 1.0, 0.935, 1.0, 1.0, 0.888, 1.0, 0.972, 0.987];
const REFERENCE_AVERAGE: f64 = 0.957;
const HELD_TO_REFERENCE: [u8; 4] = [3, 5, 6, 8];

fn auc_table(report: &ExperimentReport) -> String {
    ALL_FUNCTIONS
        .iter()
        .map(|&f| {
            let s = report.summary(f).unwrap();
            match (s.mean_auc, s.std_auc) {
                (Some(m), Some(sd)) => format!("F{f} {m:.3}±{sd:.3}"),
                _ => format!("F{f} n/a"),
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn c3_synthetic_auc_reproduction() {
    let _g = serial();
    let start = Instant::now();
    let base = ExperimentConfig::default();
    let weak = run_experiment(&base).unwrap();
    let strong_cfg = ExperimentConfig {
        train: TrainConfig {
            l1: 5e-4,
            ..base.train.clone()
        },
        ..base.clone()
    };
    let strong = run_experiment(&strong_cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let failed: usize = [&weak, &strong]
        .iter()
        .flat_map(|r| &r.trials)
        .filter(|t| t.error.is_some())
        .count();
    let mut per_function_ok = true;
    let mut held = Vec::new();
    for f in HELD_TO_REFERENCE {
        let floor = REFERENCE_AUC[f as usize - 1] - 0.10;
        let mean = weak.summary(f).and_then(|s| s.mean_auc);
        per_function_ok &= mean.is_some_and(|m| m >= floor);
        held.push(format!(
            "F{f} {:.3} >= {floor:.2}",
            mean.unwrap_or(f64::NAN)
        ));
    }
    let avg_weak = weak.average_auc.unwrap_or(f64::NAN);
    let avg_strong = strong.average_auc.unwrap_or(f64::NAN);
    let pass = failed == 0
        && per_function_ok
        && avg_weak >= 0.85
        && avg_strong < avg_weak
        && secs <= 45.0 * 60.0;
    report(
        3,
        "synthetic AUC reproduction",
        pass,
        &format!(
            "n={} trials={} trimmed; {}; average {avg_weak:.3} >= 0.85 (reference {REFERENCE_AVERAGE}); \
             L1 5e-4 average {avg_strong:.3} < {avg_weak:.3}; {failed} failed trials; {:.1} min (limit 45)\n  \
             L1 5e-5: {}\n  L1 5e-4: {}",
            base.samples,
            base.trials,
            held.join(", "),
            secs / 60.0,
            auc_table(&weak),
            auc_table(&strong),
        ),
    );
    assert!(pass);
}

#[test]
fn c4_stability_bound_under_perturbation() {
    let _g = serial();
    let start = Instant::now();
    let data = gen_synthetic(1, 10_000, 7).unwrap();
    let cfg = TrainConfig {
        hidden: vec![64, 32, 16],
        seed: 7,
        ..TrainConfig::default()
    };
    let (net, _) = train_mlp(&data, &cfg).unwrap();
    let deltas = [1e-3, 1e-2, 1e-1];
    let detect_cfg = DetectConfig::new(1, 2.0, 0.0);
    let perturbed = run_perturbation(&net, &deltas, 100, 11, &detect_cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let means: Vec<f64> = perturbed.rows.iter().map(|r| r.mean_diff).collect();
    let monotone = means.windows(2).all(|w| w[0] <= w[1]);
    let violations = perturbed.total_violations();
    let pass = violations == 0 && monotone && secs < 300.0;
    let rows: Vec<String> = perturbed
        .rows
        .iter()
        .map(|r| {
            format!(
                "delta {:e}: mean {:.4}, max {:.4}, bound {:.4}, {} violations",
                r.delta, r.mean_diff, r.max_diff, r.max_bound, r.violations
            )
        })
        .collect();
    report(
        4,
        "stability bound",
        pass,
        &format!(
            "{}; mean diff non-decreasing: {monotone}; {secs:.1} s (limit 300 s)",
            rows.join("; ")
        ),
    );
    assert!(pass);
}

#[test]
fn c5_scale_and_permutation_invariance() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut differing = 0usize;
    let mut compared = 0usize;
    for _ in 0..50 {
        let mut widths = common::random_widths(&mut rng, 5, 10);
        if widths.len() < 3 {
            widths.push(rng.random_range(1..=4));
        }
        let net = common::random_net(&mut rng, &widths);
        let h = rng.random_range(1..net.depth());
        let mut perm: Vec<usize> = (0..widths[h]).collect();
        perm.shuffle(&mut rng);
        let mut variants = vec![common::permute_hidden(&net, h, &perm)];
        for c in [1e-3, 1.0, 1e3] {
            variants.push(net.map_weights(|w| w * c).unwrap());
        }
        for layer in 1..=net.depth() {
            let cfg = DetectConfig::new(layer, 2.0, 0.0);
            let base = common::ledger_bits(&detect(&net, &cfg).unwrap());
            for v in &variants {
                compared += 1;
                if common::ledger_bits(&detect(v, &cfg).unwrap()) != base {
                    differing += 1;
                }
            }
        }
    }
    let pass = differing == 0;
    report(
        5,
        "scale and permutation invariance",
        pass,
        &format!("50 nets, {compared} ledger comparisons, {differing} not bit-identical"),
    );
    assert!(pass);
}

#[test]
fn c6_conv_flattening() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let c_in = rng.random_range(1..=3);
        let c_out = rng.random_range(1..=3);
        let h = rng.random_range(1..=8);
        let w = rng.random_range(1..=8);
        let kh = rng.random_range(1..=h);
        let kw = rng.random_range(1..=w);
        let stride = rng.random_range(1..=3);
        let kernel: Vec<f64> = (0..c_out * c_in * kh * kw)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let x: Vec<f64> = (0..c_in * h * w)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let k = ConvKernel::new(c_out, c_in, kh, kw, kernel.clone()).unwrap();
        let shape = InputShape {
            channels: c_in,
            height: h,
            width: w,
        };
        let flat = flatten_conv(&k, shape, ConvParams::with_stride(stride))
            .unwrap()
            .left_mul(&x);
        let direct = common::direct_conv(&x, (c_in, h, w), &kernel, (c_out, kh, kw), stride);
        assert_eq!(flat.len(), direct.len());
        for (a, b) in flat.iter().zip(&direct) {
            worst = worst.max((a - b).abs());
        }
    }
    let pass = worst <= 1e-9;
    report(
        6,
        "conv flattening",
        pass,
        &format!("200 kernel/input pairs, max abs diff {worst:e} (limit 1e-9)"),
    );
    assert!(pass);
}

/// Width tuples of `depth` weight layers with at most `max_edges` weights.
fn architectures(depth: usize, max_edges: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, left: usize, depth: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == depth + 1 {
            out.push(prefix.clone());
            return;
        }
        for w in 1..=left {
            let cost = prefix.last().map_or(0, |&p| p * w);
            if cost > left {
                break;
            }
            prefix.push(w);
            extend(prefix, left - cost, depth, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), max_edges, depth, &mut out);
    out
}

#[test]
fn c7_exhaustive_small_networks() {
    let _g = serial();
    let grid = [0.0, 0.5, 1.0];
    let configs = [
        DetectConfig::new(1, 2.0, 0.0),
        DetectConfig {
            p: 1.0,
            terminal: TerminalDeath::Zero,
            keep_singletons: true,
            ..DetectConfig::default()
        },
    ];
    let (mut nets, mut compared, mut mismatches) = (0usize, 0usize, 0usize);
    for depth in [2, 3] {
        for widths in architectures(depth, 8) {
            let edges: usize = widths.windows(2).map(|w| w[0] * w[1]).sum();
            for code in 0..3usize.pow(edges as u32) {
                let mut digits = code;
                let mut values = Vec::with_capacity(edges);
                for _ in 0..edges {
                    values.push(grid[digits % 3]);
                    digits /= 3;
                }
                let mut offset = 0;
                let layers: Vec<WeightMatrix> = widths
                    .windows(2)
                    .map(|w| {
                        let n = w[0] * w[1];
                        let m = WeightMatrix::new(w[0], w[1], values[offset..offset + n].to_vec())
                            .unwrap();
                        offset += n;
                        m
                    })
                    .collect();
                let Ok(net) = NetworkSpec::new(layers) else {
                    continue;
                };
                nets += 1;
                for layer in 1..=depth {
                    for base in &configs {
                        let cfg = DetectConfig { layer, ..*base };
                        compared += 1;
                        let got = common::ledger_map(&detect(&net, &cfg).unwrap());
                        if got != common::simulate_ledger(&net, &cfg) {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    let pass = mismatches == 0;
    report(
        7,
        "exhaustive small networks",
        pass,
        &format!("{nets} nets with <= 8 edges over 2-3 weight layers, {compared} ledgers, {mismatches} mismatches"),
    );
    assert!(pass);
}

/// Central-difference check of the training objective's weight gradient.
/// Returns `(checked, skipped_near_kink, worst_relative_error)`.
fn gradient_check(seed: u64) -> (usize, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut widths = common::random_widths(&mut rng, 4, 6);
    *widths.last_mut().unwrap() = 1;
    let mut mlp = Mlp::glorot(&widths, &mut rng);
    for b in mlp.biases_mut() {
        b.mapv_inplace(|_| rng.random_range(-0.2..0.2));
    }
    let rows = 4;
    let x = Array2::from_shape_fn((rows, widths[0]), |_| rng.random_range(-1.0..1.0));
    let y = Array1::from_shape_fn(rows, |_| rng.random_range(-1.0..1.0));

    let net = mlp.to_network().unwrap();
    let near_kink = (0..rows).any(|i| {
        let trace = forward_activations(&net, x.row(i).as_slice().unwrap()).unwrap();
        let hidden = &trace.pre[..trace.pre.len() - 1];
        hidden.iter().flatten().any(|z| z.abs() < 1e-6)
    });
    if near_kink {
        return (0, 1, 0.0);
    }

    let l1 = 1e-3;
    let (_, g) = mlp.gradients(x.view(), y.view(), l1);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for k in 0..mlp.weights().len() {
        let (r, c) = mlp.weights()[k].dim();
        for i in 0..r {
            for j in 0..c {
                let mut plus = mlp.clone();
                plus.weights_mut()[k][[i, j]] += h;
                let mut minus = mlp.clone();
                minus.weights_mut()[k][[i, j]] -= h;
                let fd = (plus.objective(x.view(), y.view(), l1)
                    - minus.objective(x.view(), y.view(), l1))
                    / (2.0 * h);
                let an = g.weights[k][[i, j]];
                let scale = fd.abs().max(an.abs());
                // both vanish on dead units
                let rel = if scale < 1e-9 {
                    0.0
                } else {
                    (fd - an).abs() / scale
                };
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    (checked, 0, worst)
}

#[test]
fn c8_trainer_gradients_and_fit() {
    let _g = serial();
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0_f64);
    for seed in 0..50 {
        let (c, s, w) = gradient_check(seed);
        checked += c;
        skipped += s;
        worst = worst.max(w);
    }
    let gradients_ok = worst <= 1e-4 && checked > 0;

    let start = Instant::now();
    let data = gen_synthetic(3, 30_000, 0).unwrap();
    let (_, log) = train_mlp(&data, &TrainConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let test_var = data
        .split(1.0 / 3.0, 1.0 / 3.0)
        .unwrap()
        .test
        .target_variance();
    let fit_ok = log.test_mse < 3e-3 && secs <= 600.0;

    let pass = gradients_ok && fit_ok;
    report(
        8,
        "trainer gradients and F3 fit",
        pass,
        &format!(
            "gradient check: {checked} weights, {skipped} nets skipped near a kink, worst rel err {worst:.2e} (limit 1e-4); \
             F3 n=30000 raw targets: test mse {:.3e} (limit 3e-3), test mse / Var(y) {:.2e}, best epoch {}, {secs:.0} s (limit 600 s)",
            log.test_mse,
            log.test_mse / test_var,
            log.best_epoch,
        ),
    );
    assert!(
        gradients_ok,
        "gradient check failed: worst relative error {worst}"
    );
    assert!(fit_ok, "F3 test mse {} not below 3e-3", log.test_mse);
}

#[test]
fn architecture_enumeration_is_complete() {
    let archs = architectures(2, 8);
    let set: BTreeSet<Vec<usize>> = archs.iter().cloned().collect();
    assert_eq!(set.len(), archs.len());
    assert!(set.contains(&vec![1, 1, 1]));
    assert!(set.contains(&vec![2, 2, 2]));
    assert!(set.contains(&vec![1, 4, 1]));
    assert!(!set.contains(&vec![3, 2, 2]));
    assert!(archs
        .iter()
        .all(|w| w.windows(2).map(|p| p[0] * p[1]).sum::<usize>() <= 8));
}
