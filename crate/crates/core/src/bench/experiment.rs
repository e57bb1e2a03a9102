use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auc::roc_auc;
use super::synthetic::{check_fid, gen_synthetic, ground_truth_pairs, NUM_FEATURES};
use crate::error::{PidError, Result};
use crate::model::NetworkSpec;
use crate::pid::{detect, pairwise_strengths, perturb_uniform, stability_check, DetectConfig};
use crate::trainer::{train_mlp, TrainConfig};

/// Derives an independent 64-bit seed per `(base, a, b)` triple.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z =
        base ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub functions: Vec<u8>,
    pub trials: usize,
    pub samples: usize,
    pub seed: u64,
    pub train: TrainConfig,
    pub detect: DetectConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            functions: super::synthetic::ALL_FUNCTIONS.to_vec(),
            trials: 5,
            samples: 10_000,
            seed: 0,
            train: TrainConfig::default(),
            detect: DetectConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub function: u8,
    pub trial: usize,
    pub seed: u64,
    pub auc: Option<f64>,
    pub test_mse: Option<f64>,
    pub best_epoch: Option<usize>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionSummary {
    pub function: u8,
    pub completed: usize,
    /// Trials entering the mean after trimming.
    pub kept_trials: Vec<usize>,
    pub mean_auc: Option<f64>,
    pub std_auc: Option<f64>,
    pub mean_test_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub functions: Vec<FunctionSummary>,
    /// Mean of the per-function trimmed means.
    pub average_auc: Option<f64>,
}

impl ExperimentReport {
    pub fn summary(&self, function: u8) -> Option<&FunctionSummary> {
        self.functions.iter().find(|s| s.function == function)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// One row per trial: `fid,trial,auc,test_mse,seed`. Failed trials leave
    /// the metric cells empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fid,trial,auc,test_mse,seed\n");
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for t in &self.trials {
            writeln!(
                out,
                "F{},{},{},{},{}",
                t.function,
                t.trial,
                cell(t.auc),
                cell(t.test_mse),
                t.seed
            )
            .unwrap();
        }
        out
    }
}

/// Indices kept after dropping one highest and one lowest value; all are
/// kept when fewer than four values are given.
pub fn trim_extremes(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    if n < 4 {
        return (0..n).collect();
    }
    let hi = (0..n)
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    let lo = (0..n)
        .filter(|&i| i != hi)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    (0..n).filter(|&i| i != hi && i != lo).collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Generates, trains, detects and scores one trial.
pub fn run_trial(cfg: &ExperimentConfig, function: u8, trial: usize) -> TrialResult {
    let seed = derive_seed(cfg.seed, function as u64, trial as u64);
    let start = Instant::now();
    let outcome = (|| -> Result<(f64, f64, usize)> {
        let data = gen_synthetic(function, cfg.samples, seed)?;
        let train = TrainConfig {
            seed: derive_seed(seed, 1, 0),
            ..cfg.train.clone()
        };
        let (net, log) = train_mlp(&data, &train)?;
        let ledger = detect(&net, &cfg.detect)?;
        let scores = pairwise_strengths(&ledger, NUM_FEATURES);
        let auc = roc_auc(&scores, &ground_truth_pairs(function)?)?;
        Ok((auc, log.test_mse, log.best_epoch))
    })();
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((auc, test_mse, best_epoch)) => TrialResult {
            function,
            trial,
            seed,
            auc: Some(auc),
            test_mse: Some(test_mse),
            best_epoch: Some(best_epoch),
            seconds,
            error: None,
        },
        Err(e) => TrialResult {
            function,
            trial,
            seed,
            auc: None,
            test_mse: None,
            best_epoch: None,
            seconds,
            error: Some(e.to_string()),
        },
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, |_| {})
}

/// Runs every `(function, trial)` job in parallel; `on_trial` sees each
/// result as it completes. Failed trials are recorded, not fatal.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    on_trial: impl Fn(&TrialResult) + Sync,
) -> Result<ExperimentReport> {
    if cfg.functions.is_empty() || cfg.trials == 0 {
        return Err(PidError::InvalidArgument(
            "experiment needs at least one function and one trial".into(),
        ));
    }
    for &f in &cfg.functions {
        check_fid(f)?;
    }
    cfg.train.validate()?;

    let jobs: Vec<(u8, usize)> = cfg
        .functions
        .iter()
        .flat_map(|&f| (0..cfg.trials).map(move |t| (f, t)))
        .collect();
    let mut trials: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(f, t)| {
            let r = run_trial(cfg, f, t);
            on_trial(&r);
            r
        })
        .collect();
    trials.sort_by_key(|r| (r.function, r.trial));

    let mut functions = Vec::new();
    for &f in &cfg.functions {
        let ok: Vec<&TrialResult> = trials
            .iter()
            .filter(|r| r.function == f && r.auc.is_some())
            .collect();
        let aucs: Vec<f64> = ok.iter().map(|r| r.auc.unwrap()).collect();
        let kept = trim_extremes(&aucs);
        let kept_aucs: Vec<f64> = kept.iter().map(|&i| aucs[i]).collect();
        let (mean_auc, std_auc) = if kept_aucs.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&kept_aucs);
            (Some(m), Some(s))
        };
        let mses: Vec<f64> = ok.iter().filter_map(|r| r.test_mse).collect();
        functions.push(FunctionSummary {
            function: f,
            completed: ok.len(),
            kept_trials: kept.iter().map(|&i| ok[i].trial).collect(),
            mean_auc,
            std_auc,
            mean_test_mse: (!mses.is_empty()).then(|| mean_std(&mses).0),
        });
    }
    let means: Vec<f64> = functions.iter().filter_map(|s| s.mean_auc).collect();
    let average_auc = (means.len() == functions.len()).then(|| mean_std(&means).0);
    Ok(ExperimentReport {
        config: cfg.clone(),
        trials,
        functions,
        average_auc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationRow {
    pub delta: f64,
    pub runs: usize,
    /// Mean `|ρ_f - ρ_g|` over all common candidates of all runs.
    pub mean_diff: f64,
    pub max_diff: f64,
    /// Largest `6 p N_l δ` bound seen, with `δ` the realised strength gap.
    pub max_bound: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub rows: Vec<PerturbationRow>,
}

impl PerturbationReport {
    pub fn total_violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

/// `runs` independent uniform perturbations of `net` at every magnitude.
pub fn run_perturbation(
    net: &NetworkSpec,
    deltas: &[f64],
    runs: usize,
    seed: u64,
    cfg: &DetectConfig,
) -> Result<PerturbationReport> {
    let mut rows = Vec::with_capacity(deltas.len());
    for (k, &delta) in deltas.iter().enumerate() {
        let reports = (0..runs)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64, r as u64));
                let g = perturb_uniform(net, delta, &mut rng)?;
                stability_check(net, &g, cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let diffs: Vec<f64> = reports
            .iter()
            .flat_map(|r| r.common.iter().map(|e| e.diff))
            .collect();
        rows.push(PerturbationRow {
            delta,
            runs,
            mean_diff: if diffs.is_empty() {
                0.0
            } else {
                diffs.iter().sum::<f64>() / diffs.len() as f64
            },
            max_diff: diffs.iter().fold(0.0, |m, &d| m.max(d)),
            max_bound: reports.iter().fold(0.0, |m, r| m.max(r.bound)),
            violations: reports.iter().map(|r| r.violations().count()).sum(),
        });
    }
    Ok(PerturbationReport { rows })
}
