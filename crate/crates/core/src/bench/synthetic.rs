//! The ten synthetic regression functions and their interaction ground truth.
//!
//! All functions take `d = 10` features, 0-indexed. Features are drawn from
//! `U(-1, 1)`, except F1 whose features come from `U(0.05, 1)` so that its
//! square roots, logarithm and quotients stay defined.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{DatasetSpec, Provenance};
use crate::error::{PidError, Result};

pub const NUM_FEATURES: usize = 10;
pub const ALL_FUNCTIONS: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Sampling interval of every feature of function `fid`.
pub fn feature_range(fid: u8) -> (f64, f64) {
    if fid == 1 {
        (0.05, 1.0)
    } else {
        (-1.0, 1.0)
    }
}

pub(crate) fn check_fid(fid: u8) -> Result<()> {
    if (1..=10).contains(&fid) {
        Ok(())
    } else {
        Err(PidError::InvalidArgument(format!(
            "synthetic function id must be in 1..=10, got {fid}"
        )))
    }
}

/// Parses `F3`, `f3` or `3`.
pub fn parse_fid(s: &str) -> Result<u8> {
    let t = s.trim();
    let digits = t.strip_prefix(['F', 'f']).unwrap_or(t);
    let fid = digits
        .parse::<u8>()
        .map_err(|_| PidError::InvalidArgument(format!("unknown synthetic function `{s}`")))?;
    check_fid(fid)?;
    Ok(fid)
}

fn sec(v: f64) -> f64 {
    1.0 / v.cos()
}

/// Evaluates function `fid` at `x` (length 10).
///
/// `x₂^{2|x₃|}` in F3 and F4 is evaluated as `(x₂²)^{|x₃|}`, which is real for
/// negative `x₂`. The inner square root of F2 uses `|x₆|`.
pub fn evaluate(fid: u8, x: &[f64]) -> f64 {
    let x0 = x[0];
    let (x1, x2, x3, x4, x5, x6, x7, x8, x9) =
        (x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8], x[9]);
    match fid {
        1 => {
            PI.powf(x0 * x1) * (2.0 * x2).sqrt() - x3.asin() + (x2 + x4).ln()
                - x8 / x9 * (x6 / x7).sqrt()
                - x1 * x6
        }
        2 => {
            PI.powf(x0 * x1) * (2.0 * x2.abs()).sqrt() - (0.5 * x3).asin()
                + ((x2 + x4).abs() + 1.0).ln()
                + x8 / (1.0 + x9.abs()) * (x6.abs() / (1.0 + x7.abs())).sqrt()
                - x1 * x6
        }
        3 | 4 => {
            let base = (x0 - x1).abs().exp() + (x1 * x2).abs() - (x2 * x2).powf(x3.abs())
                + (x3 * x3 + x4 * x4 + x6 * x6 + x7 * x7).ln()
                + x8
                + 1.0 / (1.0 + x9 * x9);
            if fid == 4 {
                base + x0 * x0 * x3 * x3
            } else {
                base
            }
        }
        5 => {
            1.0 / (1.0 + x0 * x0 + x1 * x1 + x2 * x2)
                + (x3 + x4).exp().sqrt()
                + (x5 + x6).abs()
                + x7 * x8 * x9
        }
        6 => {
            (x0 * x1 + 1.0).abs().exp() - ((x2 + x3).abs() + 1.0).exp()
                + (x4 + x5 - x7).cos()
                + (x7 * x7 + x8 * x8 + x9 * x9).sqrt()
        }
        7 => {
            let sum: f64 = x.iter().sum();
            (x0.atan() + x1.atan()).powi(2) + (x2 * x3 + x5).max(0.0)
                - 1.0 / (1.0 + (x3 * x4 * x5 * x6 * x7).powi(2))
                + (x6.abs() / (1.0 + x8.abs())).powi(5)
                + sum
        }
        8 => {
            x0 * x1
                + 2f64.powf(x2 + x4 + x5)
                + 2f64.powf(x2 + x3 + x4 + x6)
                + (x6 * (x7 + x8).sin()).sin()
                + (0.9 * x9).acos()
        }
        9 => {
            (x0 * x1 + x2 * x3).tanh() * x4.abs().sqrt()
                + (x4 + x5).exp()
                + (x5 * x5 * x6 * x6 * x7 * x7 + 1.0).ln()
                + x8 * x9
                + 1.0 / (1.0 + x9.abs())
        }
        10 => (x1 + x2).sinh() + (x2 + x4 + x6).tanh().acos() + (x3 + x4).cos() + sec(x6 * x8),
        _ => f64::NAN,
    }
}

/// `n` i.i.d. samples of function `fid`, reproducible from `seed`.
pub fn gen_synthetic(fid: u8, n: usize, seed: u64) -> Result<DatasetSpec> {
    check_fid(fid)?;
    let (lo, hi) = feature_range(fid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * NUM_FEATURES);
    let mut y = Vec::with_capacity(n);
    for sample in 0..n {
        let start = x.len();
        for _ in 0..NUM_FEATURES {
            x.push(rng.random_range(lo..hi));
        }
        let row = &x[start..];
        let v = evaluate(fid, row);
        if !v.is_finite() {
            return Err(PidError::DomainViolation {
                fid,
                sample,
                detail: format!("F{fid}({row:?}) = {v}"),
            });
        }
        y.push(v);
    }
    Ok(
        DatasetSpec::new(NUM_FEATURES, x, y)?.with_provenance(Provenance {
            function: Some(fid),
            seed: Some(seed),
            note: format!("features ~ U({lo}, {hi})"),
        }),
    )
}

/// Unordered feature pairs that share a non-additive term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub function: Option<u8>,
    pub num_features: usize,
    pub pairs: BTreeSet<(usize, usize)>,
}

impl GroundTruth {
    /// Pairwise subsets of each term's variable set. Single-variable terms
    /// contribute nothing.
    pub fn from_terms(function: Option<u8>, num_features: usize, terms: &[&[usize]]) -> Self {
        let mut pairs = BTreeSet::new();
        for term in terms {
            for (a, &i) in term.iter().enumerate() {
                for &j in &term[a + 1..] {
                    if i != j {
                        pairs.insert((i.min(j), i.max(j)));
                    }
                }
            }
        }
        GroundTruth {
            function,
            num_features,
            pairs,
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i.min(j), i.max(j)))
    }
}

/// Variable sets of the non-additive terms of function `fid`.
pub fn interaction_terms(fid: u8) -> Result<Vec<Vec<usize>>> {
    check_fid(fid)?;
    let terms: &[&[usize]] = match fid {
        1 | 2 => &[&[0, 1, 2], &[2, 4], &[6, 7, 8, 9], &[1, 6]],
        3 => &[&[0, 1], &[1, 2], &[2, 3], &[3, 4, 6, 7]],
        4 => &[&[0, 1], &[1, 2], &[2, 3], &[3, 4, 6, 7], &[0, 3]],
        5 => &[&[0, 1, 2], &[3, 4], &[5, 6], &[7, 8, 9]],
        6 => &[&[0, 1], &[2, 3], &[4, 5, 7], &[7, 8, 9]],
        7 => &[&[0, 1], &[2, 3, 5], &[3, 4, 5, 6, 7], &[6, 8]],
        8 => &[&[0, 1], &[2, 4, 5], &[2, 3, 4, 6], &[6, 7, 8]],
        9 => &[&[0, 1, 2, 3, 4], &[4, 5], &[5, 6, 7], &[8, 9]],
        _ => &[&[1, 2], &[2, 4, 6], &[3, 4], &[6, 8]],
    };
    Ok(terms.iter().map(|t| t.to_vec()).collect())
}

pub fn ground_truth_pairs(fid: u8) -> Result<GroundTruth> {
    let terms = interaction_terms(fid)?;
    let refs: Vec<&[usize]> = terms.iter().map(Vec::as_slice).collect();
    Ok(GroundTruth::from_terms(Some(fid), NUM_FEATURES, &refs))
}
