//! Persistence interaction detection.
//!
//! For every unit `r` of a target layer the filtration is swept from the
//! strongest edge down. The features reaching `r` only ever grow, and so does
//! `r`'s connectivity to the outputs. While `r` is output-connected its
//! current feature set is the alive interaction candidate: it is born when it
//! first appears and dies as soon as another feature joins, at which point
//! the enlarged set is born. The candidate alive at the end of the sweep dies
//! at the last threshold (or at zero, see [`TerminalDeath`]).
//!
//! A candidate's strength is `Σ_r |birth - death|^p` over the units where it
//! was alive.

mod ledger;
mod saliency;
mod stability;

pub use ledger::{rank, read_ranked_json, PersistenceLedger, RankedInteraction};
pub use saliency::{saliency, SaliencyMap};
pub use stability::{perturb_uniform, stability_check, StabilityEntry, StabilityReport};

use std::collections::BTreeMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{PidError, Result};
use crate::filtration::{build_filtration, Filtration, ReachabilitySweep};
use crate::model::NetworkSpec;

/// Sorted set of input feature indices.
///
/// Ordered by cardinality first, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InteractionCandidate(Vec<usize>);

impl InteractionCandidate {
    pub fn new(mut features: Vec<usize>) -> Self {
        features.sort_unstable();
        features.dedup();
        InteractionCandidate(features)
    }

    pub fn features(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.0.binary_search(&feature).is_ok()
    }

    pub fn is_subset(&self, other: &InteractionCandidate) -> bool {
        self.0.iter().all(|f| other.contains(*f))
    }

    fn from_bits(bits: &FixedBitSet) -> Self {
        InteractionCandidate(bits.ones().collect())
    }
}

impl Ord for InteractionCandidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for InteractionCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for InteractionCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl From<Vec<usize>> for InteractionCandidate {
    fn from(v: Vec<usize>) -> Self {
        InteractionCandidate::new(v)
    }
}

/// Where the candidate still alive at the end of a sweep dies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalDeath {
    /// The smallest retained threshold `w'_n`.
    #[default]
    LastThreshold,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Target layer, 1-based.
    pub layer: usize,
    pub p: f64,
    pub eta: f64,
    pub terminal: TerminalDeath,
    /// Keep single-feature candidates (main-effect diagnostics).
    pub keep_singletons: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            layer: 1,
            p: 2.0,
            eta: 0.0,
            terminal: TerminalDeath::LastThreshold,
            keep_singletons: false,
        }
    }
}

impl DetectConfig {
    pub fn new(layer: usize, p: f64, eta: f64) -> Self {
        DetectConfig {
            layer,
            p,
            eta,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(PidError::InvalidArgument(format!(
                "norm exponent p must be >= 1, got {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// One alive interval of a candidate at one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifetime {
    pub features: InteractionCandidate,
    pub birth: f64,
    pub death: f64,
}

impl Lifetime {
    pub fn persistence(&self) -> f64 {
        (self.birth - self.death).abs()
    }
}

/// Sweep state of one target-layer unit.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    pub neuron: usize,
    /// Features in join order with their join thresholds (non-increasing).
    pub joined: Vec<(usize, f64)>,
    pub output_connected_at: Option<f64>,
    /// Birth threshold of the currently alive candidate.
    pub alive_birth: Option<f64>,
    joined_bits: FixedBitSet,
}

impl NeuronState {
    fn new(neuron: usize, d: usize) -> Self {
        NeuronState {
            neuron,
            joined: Vec::new(),
            output_connected_at: None,
            alive_birth: None,
            joined_bits: FixedBitSet::with_capacity(d),
        }
    }

    fn alive(&self) -> InteractionCandidate {
        InteractionCandidate::from_bits(&self.joined_bits)
    }

    /// Applies the reachability of this unit after the edges of threshold
    /// `lambda` were added; returns the lifetime that ended, if any.
    fn observe(
        &mut self,
        lambda: f64,
        features: &FixedBitSet,
        output_connected: bool,
    ) -> Option<Lifetime> {
        let before = self.alive();
        // ascending index, as in a left-to-right scan of the mask row
        let mut fresh = false;
        for j in features.difference(&self.joined_bits).collect::<Vec<_>>() {
            self.joined.push((j, lambda));
            self.joined_bits.insert(j);
            fresh = true;
        }
        if self.output_connected_at.is_none() && output_connected {
            self.output_connected_at = Some(lambda);
        }
        if self.output_connected_at.is_none() || self.joined.is_empty() {
            return None;
        }
        match self.alive_birth {
            Some(birth) if fresh => {
                self.alive_birth = Some(lambda);
                Some(Lifetime {
                    features: before,
                    birth,
                    death: lambda,
                })
            }
            Some(_) => None,
            None => {
                self.alive_birth = Some(lambda);
                None
            }
        }
    }

    fn finish(&mut self, terminal: f64) -> Option<Lifetime> {
        let birth = self.alive_birth.take()?;
        Some(Lifetime {
            features: self.alive(),
            birth,
            death: terminal,
        })
    }
}

/// Every lifetime produced at one unit, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronTrace {
    pub state: NeuronState,
    pub lifetimes: Vec<Lifetime>,
}

impl NeuronTrace {
    pub fn neuron(&self) -> usize {
        self.state.neuron
    }
}

/// Runs the sweep and returns the per-unit persistence record.
pub fn neuron_traces(filt: &Filtration, cfg: &DetectConfig) -> Result<Vec<NeuronTrace>> {
    cfg.validate()?;
    filt.check_layer(cfg.layer)?;
    let d = filt.input_dim();
    let p_l = filt.widths()[cfg.layer];
    let mut traces: Vec<NeuronTrace> = (0..p_l)
        .map(|r| NeuronTrace {
            state: NeuronState::new(r, d),
            lifetimes: Vec::new(),
        })
        .collect();

    let mut sweep = ReachabilitySweep::new(filt, cfg.layer)?;
    while let Some(lambda) = sweep.advance() {
        for &r in sweep.changed_units() {
            let out = sweep.reaches_output(r);
            let t = &mut traces[r];
            if let Some(life) = t.state.observe(lambda, sweep.features_of(r), out) {
                t.lifetimes.push(life);
            }
        }
    }
    let terminal = match cfg.terminal {
        TerminalDeath::LastThreshold => filt.last_threshold(),
        TerminalDeath::Zero => 0.0,
    };
    for t in &mut traces {
        if let Some(life) = t.state.finish(terminal) {
            t.lifetimes.push(life);
        }
    }
    Ok(traces)
}

#[inline]
pub(crate) fn pow_p(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

pub fn detect_filtration(filt: &Filtration, cfg: &DetectConfig) -> Result<PersistenceLedger> {
    let traces = neuron_traces(filt, cfg)?;
    let mut contributions: BTreeMap<InteractionCandidate, Vec<f64>> = BTreeMap::new();
    for life in traces.iter().flat_map(|t| &t.lifetimes) {
        if life.features.len() < 2 && !cfg.keep_singletons {
            continue;
        }
        let c = pow_p(life.persistence(), cfg.p);
        if c > 0.0 {
            contributions
                .entry(life.features.clone())
                .or_default()
                .push(c);
        }
    }
    Ok(PersistenceLedger::from_contributions(
        contributions,
        filt.input_dim(),
        cfg,
    ))
}

pub fn detect(net: &NetworkSpec, cfg: &DetectConfig) -> Result<PersistenceLedger> {
    cfg.validate()?;
    if cfg.layer == 0 || cfg.layer > net.depth() {
        return Err(PidError::LayerOutOfRange {
            layer: cfg.layer,
            max: net.depth(),
        });
    }
    let filt = build_filtration(net, cfg.eta)?;
    detect_filtration(&filt, cfg)
}

/// `S[i][j] = Σ ρ(C)` over candidates `C ⊇ {i, j}`; zero diagonal.
pub fn pairwise_strengths(ledger: &PersistenceLedger, d: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; d]; d];
    for (cand, &rho) in ledger.iter() {
        let f = cand.features();
        for (a, &i) in f.iter().enumerate() {
            for &j in &f[a + 1..] {
                if i < d && j < d {
                    s[i][j] += rho;
                    s[j][i] += rho;
                }
            }
        }
    }
    s
}
