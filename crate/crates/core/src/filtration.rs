//! Size pair, descending filtration and layered boolean reachability.
//!
//! Edge strength is `phi(e) = |w_e| / w_max`. Strengths are stored at single
//! precision: that makes the filtration exactly invariant under a positive
//! rescaling of the weights (the f64 rounding noise of `c * w` never survives
//! the narrowing) and merges thresholds that differ only by float noise.
//!
//! Reachability at a threshold `λ` is the boolean product of per-layer masks
//! `M_(l)[i][j] = phi(v_{l-1,i}, v_{l,j}) >= λ`. For a target layer `l` it is
//! split into an input side (`down`, `p_l x d`) and an output side (`up`,
//! `p_L x p_l`). [`ReachabilitySweep`] maintains both incrementally as the
//! threshold descends; [`MaskMode::Naive`] recomputes the products.

use std::ops::Range;

use fixedbitset::FixedBitSet;

use crate::error::{PidError, Result};
use crate::model::{NetworkSpec, WeightMatrix};

/// Normalized strength of a weight, rounded to single precision.
#[inline]
pub fn edge_strength(weight: f64, w_max: f64) -> f64 {
    ((weight.abs() / w_max) as f32) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// 1-based weight layer.
    pub layer: usize,
    pub source: usize,
    pub target: usize,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    widths: Vec<usize>,
    /// Strength of every edge, pruned or not, laid out like the weights.
    phi: Vec<WeightMatrix>,
    /// Retained edges sorted by descending strength.
    edges: Vec<Edge>,
    thresholds: Vec<f64>,
    steps: Vec<Range<usize>>,
    w_max: f64,
    eta: f64,
}

pub fn build_filtration(net: &NetworkSpec, eta: f64) -> Result<Filtration> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(PidError::InvalidArgument(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    let w_max = net.max_abs_weight();
    if w_max <= 0.0 {
        return Err(PidError::AllZeroNetwork);
    }
    let phi: Vec<WeightMatrix> = net
        .layers()
        .iter()
        .map(|w| w.map(|v| edge_strength(v, w_max)))
        .collect();

    let mut edges = Vec::new();
    for (k, m) in phi.iter().enumerate() {
        for i in 0..m.rows() {
            for (j, &s) in m.row(i).iter().enumerate() {
                if s >= eta {
                    edges.push(Edge {
                        layer: k + 1,
                        source: i,
                        target: j,
                        phi: s,
                    });
                }
            }
        }
    }
    if edges.is_empty() {
        return Err(PidError::EmptyFiltration { eta });
    }
    // stable sort keeps (layer, source, target) order among ties
    edges.sort_by(|a, b| b.phi.total_cmp(&a.phi));

    let mut thresholds = Vec::new();
    let mut steps = Vec::new();
    let mut start = 0;
    for k in 1..=edges.len() {
        if k == edges.len() || edges[k].phi != edges[start].phi {
            thresholds.push(edges[start].phi);
            steps.push(start..k);
            start = k;
        }
    }

    Ok(Filtration {
        widths: net.widths(),
        phi,
        edges,
        thresholds,
        steps,
        w_max,
        eta,
    })
}

impl Filtration {
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Distinct retained strengths, strictly descending; `thresholds()[0] == 1`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Edges entering the filtration at `thresholds()[k]`.
    pub fn step_edges(&self, k: usize) -> &[Edge] {
        &self.edges[self.steps[k].clone()]
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Smallest retained threshold `w'_n`.
    pub fn last_threshold(&self) -> f64 {
        *self.thresholds.last().expect("filtration is never empty")
    }

    /// Strength of edge `(v_{l-1,i}, v_{l,j})` before pruning.
    pub fn phi(&self, layer: usize, source: usize, target: usize) -> f64 {
        self.phi[layer - 1].get(source, target)
    }

    pub fn phi_layers(&self) -> &[WeightMatrix] {
        &self.phi
    }

    /// Whether the edge is present in `G^λ`.
    #[inline]
    pub fn is_active(&self, layer: usize, source: usize, target: usize, lambda: f64) -> bool {
        let s = self.phi(layer, source, target);
        s >= self.eta && s >= lambda
    }

    pub(crate) fn check_layer(&self, layer: usize) -> Result<()> {
        if layer == 0 || layer > self.depth() {
            return Err(PidError::LayerOutOfRange {
                layer,
                max: self.depth(),
            });
        }
        Ok(())
    }
}

/// Dense boolean matrix stored as one bitset per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    cols: usize,
    rows: Vec<FixedBitSet>,
}

impl BoolMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        BoolMatrix {
            cols,
            rows: vec![FixedBitSet::with_capacity(cols); rows],
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<FixedBitSet>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == cols));
        BoolMatrix { cols, rows }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].contains(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value);
    }

    pub fn row(&self, i: usize) -> &FixedBitSet {
        &self.rows[i]
    }

    pub fn count_ones(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    /// `self` implies `other` entrywise.
    pub fn is_subset(&self, other: &BoolMatrix) -> bool {
        self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.is_subset(b))
    }
}

/// Up/down connectivity of the units of one target layer at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityView {
    pub layer: usize,
    pub threshold: f64,
    /// `p_L x p_l`: output `o` reachable from unit `r`.
    pub up: BoolMatrix,
    /// `p_l x d`: feature `i` reaches unit `r`.
    pub down: BoolMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    #[default]
    Incremental,
    /// Per-threshold boolean matrix products.
    Naive,
}

pub fn masks_at(filt: &Filtration, lambda: f64, layer: usize) -> Result<ReachabilityView> {
    masks_at_with(filt, lambda, layer, MaskMode::Incremental)
}

pub fn masks_at_with(
    filt: &Filtration,
    lambda: f64,
    layer: usize,
    mode: MaskMode,
) -> Result<ReachabilityView> {
    filt.check_layer(layer)?;
    match mode {
        MaskMode::Incremental => {
            let mut sweep = ReachabilitySweep::new(filt, layer)?;
            sweep.advance_to(lambda);
            Ok(sweep.view_at(lambda))
        }
        MaskMode::Naive => Ok(naive_view(filt, lambda, layer)),
    }
}

fn naive_view(filt: &Filtration, lambda: f64, layer: usize) -> ReachabilityView {
    let widths = filt.widths();
    let depth = filt.depth();
    let d = widths[0];

    // down = M_(l)^T ... M_(1)^T, carried as "features reaching each unit"
    let mut reach: Vec<FixedBitSet> = (0..d)
        .map(|i| {
            let mut b = FixedBitSet::with_capacity(d);
            b.insert(i);
            b
        })
        .collect();
    for (k, &units) in widths.iter().enumerate().take(layer + 1).skip(1) {
        let mut next = vec![FixedBitSet::with_capacity(d); units];
        for (i, src) in reach.iter().enumerate() {
            for (j, dst) in next.iter_mut().enumerate() {
                if filt.is_active(k, i, j, lambda) {
                    dst.union_with(src);
                }
            }
        }
        reach = next;
    }
    let down = BoolMatrix::from_rows(d, reach);

    // up = M_(L)^T ... M_(l+1)^T, carried as "outputs reachable from each unit"
    let p_out = widths[depth];
    let mut reach: Vec<FixedBitSet> = (0..p_out)
        .map(|o| {
            let mut b = FixedBitSet::with_capacity(p_out);
            b.insert(o);
            b
        })
        .collect();
    for k in (layer + 1..=depth).rev() {
        let mut prev = vec![FixedBitSet::with_capacity(p_out); widths[k - 1]];
        for (i, dst) in prev.iter_mut().enumerate() {
            for (j, src) in reach.iter().enumerate() {
                if filt.is_active(k, i, j, lambda) {
                    dst.union_with(src);
                }
            }
        }
        reach = prev;
    }
    let mut up = BoolMatrix::new(p_out, widths[layer]);
    for (r, outs) in reach.iter().enumerate() {
        for o in outs.ones() {
            up.set(o, r, true);
        }
    }

    ReachabilityView {
        layer,
        threshold: lambda,
        up,
        down,
    }
}

/// Incremental up/down reachability for one target layer.
///
/// Thresholds are consumed in descending order. Each newly active edge
/// pushes its source's feature set (input side) or its target's output set
/// (output side) along the already-active edges, so every edge-bit pair is
/// propagated at most once over the whole sweep.
#[derive(Debug, Clone)]
pub struct ReachabilitySweep<'a> {
    filt: &'a Filtration,
    layer: usize,
    offsets: Vec<usize>,
    next_step: usize,
    /// Active out-neighbours of input-side units (layers `0..l`).
    out_adj: Vec<Vec<usize>>,
    /// Active in-neighbours of output-side units (layers `l+1..=L`).
    in_adj: Vec<Vec<usize>>,
    /// Features reaching each unit of layers `0..=l`.
    features: Vec<FixedBitSet>,
    /// Outputs reachable from each unit of layers `l..=L`.
    outputs: Vec<FixedBitSet>,
    changed: Vec<usize>,
    changed_mark: FixedBitSet,
    worklist: Vec<usize>,
}

impl<'a> ReachabilitySweep<'a> {
    pub fn new(filt: &'a Filtration, layer: usize) -> Result<Self> {
        filt.check_layer(layer)?;
        let widths = filt.widths();
        let mut offsets = Vec::with_capacity(widths.len() + 1);
        let mut total = 0;
        for &w in widths {
            offsets.push(total);
            total += w;
        }
        offsets.push(total);

        let d = widths[0];
        let p_out = *widths.last().unwrap();
        let mut features = vec![FixedBitSet::with_capacity(d); offsets[layer + 1]];
        for (i, f) in features.iter_mut().take(d).enumerate() {
            f.insert(i);
        }
        let base = offsets[layer];
        let mut outputs = vec![FixedBitSet::with_capacity(p_out); total - base];
        let out_base = offsets[widths.len() - 1];
        for o in 0..p_out {
            outputs[out_base + o - base].insert(o);
        }

        Ok(ReachabilitySweep {
            filt,
            layer,
            next_step: 0,
            out_adj: vec![Vec::new(); offsets[layer]],
            in_adj: vec![Vec::new(); total - offsets[layer + 1].min(total)],
            features,
            outputs,
            changed: Vec::new(),
            changed_mark: FixedBitSet::with_capacity(widths[layer]),
            worklist: Vec::new(),
            offsets,
        })
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn filtration(&self) -> &'a Filtration {
        self.filt
    }

    /// Index of the next threshold to be processed.
    pub fn position(&self) -> usize {
        self.next_step
    }

    pub fn is_done(&self) -> bool {
        self.next_step >= self.filt.thresholds().len()
    }

    /// Adds every edge of the next threshold; returns that threshold.
    pub fn advance(&mut self) -> Option<f64> {
        if self.is_done() {
            return None;
        }
        let k = self.next_step;
        self.next_step += 1;
        for r in self.changed.drain(..) {
            self.changed_mark.set(r, false);
        }
        for e in self.filt.step_edges(k) {
            if e.layer <= self.layer {
                self.add_input_side(e);
            } else {
                self.add_output_side(e);
            }
        }
        Some(self.filt.thresholds()[k])
    }

    /// Processes every threshold `>= lambda`.
    pub fn advance_to(&mut self, lambda: f64) {
        while !self.is_done() && self.filt.thresholds()[self.next_step] >= lambda {
            self.advance();
        }
    }

    /// Target-layer units whose feature set or output connectivity changed
    /// during the last [`advance`](Self::advance).
    pub fn changed_units(&self) -> &[usize] {
        &self.changed
    }

    pub fn features_of(&self, unit: usize) -> &FixedBitSet {
        &self.features[self.offsets[self.layer] + unit]
    }

    pub fn outputs_of(&self, unit: usize) -> &FixedBitSet {
        &self.outputs[unit]
    }

    pub fn reaches_output(&self, unit: usize) -> bool {
        !self.outputs[unit].is_clear()
    }

    pub fn view_at(&self, lambda: f64) -> ReachabilityView {
        let widths = self.filt.widths();
        let p_l = widths[self.layer];
        let p_out = *widths.last().unwrap();
        let down = BoolMatrix::from_rows(
            widths[0],
            (0..p_l).map(|r| self.features_of(r).clone()).collect(),
        );
        let mut up = BoolMatrix::new(p_out, p_l);
        for r in 0..p_l {
            for o in self.outputs[r].ones() {
                up.set(o, r, true);
            }
        }
        ReachabilityView {
            layer: self.layer,
            threshold: lambda,
            up,
            down,
        }
    }

    fn mark_changed(&mut self, global: usize) {
        let base = self.offsets[self.layer];
        if global >= base && global < self.offsets[self.layer + 1] {
            let r = global - base;
            if !self.changed_mark.put(r) {
                self.changed.push(r);
            }
        }
    }

    fn add_input_side(&mut self, e: &Edge) {
        let a = self.offsets[e.layer - 1] + e.source;
        let b = self.offsets[e.layer] + e.target;
        self.out_adj[a].push(b);
        let src = self.features[a].clone();
        if src.is_subset(&self.features[b]) {
            return;
        }
        self.features[b].union_with(&src);
        self.mark_changed(b);
        let limit = self.offsets[self.layer];
        self.worklist.push(b);
        while let Some(u) = self.worklist.pop() {
            if u >= limit {
                continue;
            }
            let bits = self.features[u].clone();
            for idx in 0..self.out_adj[u].len() {
                let v = self.out_adj[u][idx];
                if !bits.is_subset(&self.features[v]) {
                    self.features[v].union_with(&bits);
                    self.mark_changed(v);
                    self.worklist.push(v);
                }
            }
        }
    }

    fn add_output_side(&mut self, e: &Edge) {
        let base = self.offsets[self.layer];
        let in_base = self.offsets[self.layer + 1];
        let a = self.offsets[e.layer - 1] + e.source;
        let b = self.offsets[e.layer] + e.target;
        self.in_adj[b - in_base].push(a);
        let dst = self.outputs[b - base].clone();
        if dst.is_subset(&self.outputs[a - base]) {
            return;
        }
        self.outputs[a - base].union_with(&dst);
        self.mark_changed(a);
        self.worklist.push(a);
        while let Some(u) = self.worklist.pop() {
            if u < in_base {
                continue;
            }
            let bits = self.outputs[u - base].clone();
            for idx in 0..self.in_adj[u - in_base].len() {
                let v = self.in_adj[u - in_base][idx];
                if !bits.is_subset(&self.outputs[v - base]) {
                    self.outputs[v - base].union_with(&bits);
                    self.mark_changed(v);
                    self.worklist.push(v);
                }
            }
        }
    }
}

/// Whether feature set `features` and output unit `output` are connected at
/// `lambda` with no other feature in the component: row `output` of the
/// aggregated mask is nonzero exactly on `features`.
pub fn connected(filt: &Filtration, lambda: f64, features: &[usize], output: usize) -> bool {
    let d = filt.input_dim();
    if features.is_empty() || features.iter().any(|&i| i >= d) {
        return false;
    }
    let depth = filt.depth();
    if output >= filt.widths()[depth] {
        return false;
    }
    let mut sweep = ReachabilitySweep::new(filt, depth).expect("depth is a valid layer");
    sweep.advance_to(lambda);
    let row = sweep.features_of(output);
    let mut wanted = FixedBitSet::with_capacity(d);
    for &i in features {
        wanted.insert(i);
    }
    *row == wanted
}
