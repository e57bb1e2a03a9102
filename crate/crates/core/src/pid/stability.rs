//! Perturbation stability of candidate strengths.
//!
//! For two networks of the same architecture with edge strengths at most
//! `δ` apart, every candidate detected in both satisfies
//! `|ρ_f - ρ_g| <= 6 p N_l δ`, where `N_l` is the width of the target layer.

use rand::Rng;
use serde::Serialize;

use super::{detect_filtration, DetectConfig, InteractionCandidate};
use crate::error::{PidError, Result};
use crate::filtration::build_filtration;
use crate::model::NetworkSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityEntry {
    pub features: InteractionCandidate,
    pub rho_f: f64,
    pub rho_g: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// `max_e |φ_f(e) - φ_g(e)|` over all edges.
    pub delta: f64,
    pub p: f64,
    pub layer: usize,
    pub layer_units: usize,
    /// `6 p N_l δ`.
    pub bound: f64,
    pub common: Vec<StabilityEntry>,
    pub only_in_f: Vec<InteractionCandidate>,
    pub only_in_g: Vec<InteractionCandidate>,
}

impl StabilityReport {
    pub fn max_diff(&self) -> f64 {
        self.common.iter().fold(0.0, |m, e| m.max(e.diff))
    }

    pub fn mean_diff(&self) -> Option<f64> {
        if self.common.is_empty() {
            return None;
        }
        Some(self.common.iter().map(|e| e.diff).sum::<f64>() / self.common.len() as f64)
    }

    pub fn violations(&self) -> impl Iterator<Item = &StabilityEntry> {
        self.common.iter().filter(move |e| e.diff > self.bound)
    }

    pub fn holds(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

pub fn stability_check(
    net_f: &NetworkSpec,
    net_g: &NetworkSpec,
    cfg: &DetectConfig,
) -> Result<StabilityReport> {
    if !net_f.same_architecture(net_g) {
        return Err(PidError::ArchitectureMismatch(format!(
            "{:?} vs {:?}",
            net_f.widths(),
            net_g.widths()
        )));
    }
    if cfg.layer == 0 || cfg.layer > net_f.depth() {
        return Err(PidError::LayerOutOfRange {
            layer: cfg.layer,
            max: net_f.depth(),
        });
    }
    let filt_f = build_filtration(net_f, cfg.eta)?;
    let filt_g = build_filtration(net_g, cfg.eta)?;

    let delta = filt_f
        .phi_layers()
        .iter()
        .zip(filt_g.phi_layers())
        .flat_map(|(a, b)| a.data().iter().zip(b.data()))
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));

    let ledger_f = detect_filtration(&filt_f, cfg)?;
    let ledger_g = detect_filtration(&filt_g, cfg)?;

    let mut common = Vec::new();
    let mut only_in_f = Vec::new();
    for (cand, &rho_f) in ledger_f.iter() {
        match ledger_g.strength(cand) {
            Some(rho_g) => common.push(StabilityEntry {
                features: cand.clone(),
                rho_f,
                rho_g,
                diff: (rho_f - rho_g).abs(),
            }),
            None => only_in_f.push(cand.clone()),
        }
    }
    let only_in_g = ledger_g
        .iter()
        .filter(|(c, _)| ledger_f.strength(c).is_none())
        .map(|(c, _)| c.clone())
        .collect();

    let layer_units = net_f.widths()[cfg.layer];
    Ok(StabilityReport {
        delta,
        p: cfg.p,
        layer: cfg.layer,
        layer_units,
        bound: 6.0 * cfg.p * layer_units as f64 * delta,
        common,
        only_in_f,
        only_in_g,
    })
}

/// Adds independent `U[-δ, δ] * w_max` noise to every weight, i.e. noise of
/// magnitude `δ` on the strength scale of the original network.
pub fn perturb_uniform<R: Rng + ?Sized>(
    net: &NetworkSpec,
    delta: f64,
    rng: &mut R,
) -> Result<NetworkSpec> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(PidError::InvalidArgument(format!(
            "perturbation magnitude must be finite and nonnegative, got {delta}"
        )));
    }
    let scale = net.max_abs_weight() * delta;
    let noise: Vec<Vec<f64>> = net
        .layers()
        .iter()
        .map(|w| {
            (0..w.data().len())
                .map(|_| {
                    if scale > 0.0 {
                        rng.random_range(-scale..=scale)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let layers = net
        .layers()
        .iter()
        .zip(noise)
        .map(|(w, n)| {
            let data = w.data().iter().zip(n).map(|(a, b)| a + b).collect();
            crate::model::WeightMatrix::new(w.rows(), w.cols(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = NetworkSpec::new(layers)?;
    if let Some(b) = net.biases() {
        out = out.with_biases(b.to_vec())?;
    }
    Ok(out)
}
