use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DetectConfig, InteractionCandidate};
use crate::error::{PidError, Result};

/// Accumulated strength `ρ` of every detected candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceLedger {
    entries: BTreeMap<InteractionCandidate, f64>,
    num_features: usize,
    p: f64,
    layer: usize,
    eta: f64,
}

impl PersistenceLedger {
    /// Sums each candidate's contributions in ascending order, so the result
    /// does not depend on the order units were visited in.
    pub(crate) fn from_contributions(
        contributions: BTreeMap<InteractionCandidate, Vec<f64>>,
        num_features: usize,
        cfg: &DetectConfig,
    ) -> Self {
        let entries = contributions
            .into_iter()
            .filter_map(|(cand, mut parts)| {
                parts.sort_by(f64::total_cmp);
                let rho: f64 = parts.iter().sum();
                (rho > 0.0).then_some((cand, rho))
            })
            .collect();
        PersistenceLedger {
            entries,
            num_features,
            p: cfg.p,
            layer: cfg.layer,
            eta: cfg.eta,
        }
    }

    /// Builds a ledger from explicit strengths; zero entries are dropped.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (InteractionCandidate, f64)>,
        num_features: usize,
        cfg: &DetectConfig,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (cand, rho) in entries {
            if !rho.is_finite() || rho < 0.0 {
                return Err(PidError::InvalidArgument(format!(
                    "strength of {cand} must be finite and nonnegative, got {rho}"
                )));
            }
            if cand.features().iter().any(|&f| f >= num_features) {
                return Err(PidError::InvalidArgument(format!(
                    "{cand} references a feature outside 0..{num_features}"
                )));
            }
            if rho > 0.0 {
                *map.entry(cand).or_insert(0.0) += rho;
            }
        }
        Ok(PersistenceLedger {
            entries: map,
            num_features,
            p: cfg.p,
            layer: cfg.layer,
            eta: cfg.eta,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn strength(&self, cand: &InteractionCandidate) -> Option<f64> {
        self.entries.get(cand).copied()
    }

    /// Entries in candidate order (cardinality, then lexicographic).
    pub fn iter(&self) -> impl Iterator<Item = (&InteractionCandidate, &f64)> {
        self.entries.iter()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Descending-strength JSON array of `{"features": [...], "strength": x}`.
    pub fn to_ranked_json(&self) -> String {
        serde_json::to_string_pretty(&rank(self)).expect("ledger serialization is infallible")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedInteraction {
    pub features: InteractionCandidate,
    pub strength: f64,
}

/// Candidates by descending strength; ties go to the smaller set, then to
/// the lexicographically smaller one.
pub fn rank(ledger: &PersistenceLedger) -> Vec<RankedInteraction> {
    let mut out: Vec<RankedInteraction> = ledger
        .iter()
        .map(|(c, &s)| RankedInteraction {
            features: c.clone(),
            strength: s,
        })
        .collect();
    // stable: equal strengths keep the map's (cardinality, lexicographic) order
    out.sort_by(|a, b| b.strength.total_cmp(&a.strength));
    out
}

pub fn read_ranked_json(text: &str) -> Result<Vec<RankedInteraction>> {
    serde_json::from_str(text).map_err(|e| PidError::Parse(e.to_string()))
}
