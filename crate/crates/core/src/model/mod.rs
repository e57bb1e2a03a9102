//! Network weights as a layered weighted DAG.
//!
//! Layer `l` (1-based, as in the rest of the crate) is stored as a
//! `p_{l-1} x p_l` row-major matrix: rows index the source units, columns the
//! target units. Input features form layer 0, so `p_0 = d`.

mod conv;
mod io;
mod local;

pub use conv::{flatten_conv, ConvKernel, ConvParams, InputShape};
pub use io::{load_network, save_network, MODEL_FORMAT};
pub use local::{forward_activations, local_weights, ActivationTrace, LocalNetworkSpec};

use serde_json::{Map, Value};

use crate::error::{PidError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(PidError::InvalidArgument(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(WeightMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        WeightMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(PidError::InvalidArgument("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        WeightMatrix::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// `x · W` for a row vector `x` of length `rows`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += xi * w;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        WeightMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// A feed-forward network viewed as its weight matrices.
///
/// Biases ride along for forward passes but never enter the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    layers: Vec<WeightMatrix>,
    biases: Option<Vec<Vec<f64>>>,
    meta: Map<String, Value>,
}

impl NetworkSpec {
    pub fn new(layers: Vec<WeightMatrix>) -> Result<Self> {
        let net = NetworkSpec {
            layers,
            biases: None,
            meta: Map::new(),
        };
        net.validate()?;
        Ok(net)
    }

    pub fn with_biases(mut self, biases: Vec<Vec<f64>>) -> Result<Self> {
        if biases.len() != self.layers.len() {
            return Err(PidError::ShapeMismatch {
                layer: biases.len().min(self.layers.len()) + 1,
                reason: format!(
                    "{} bias vectors for {} layers",
                    biases.len(),
                    self.layers.len()
                ),
            });
        }
        for (l, (b, w)) in biases.iter().zip(&self.layers).enumerate() {
            if b.len() != w.cols() {
                return Err(PidError::ShapeMismatch {
                    layer: l + 1,
                    reason: format!("bias length {} but layer has {} units", b.len(), w.cols()),
                });
            }
            if let Some(col) = b.iter().position(|v| !v.is_finite()) {
                return Err(PidError::NonFinite {
                    layer: l + 1,
                    row: 0,
                    col,
                });
            }
        }
        self.biases = Some(biases);
        Ok(self)
    }

    pub fn with_meta(mut self, meta: Map<String, Value>) -> Self {
        self.meta = meta;
        self
    }

    fn validate(&self) -> Result<()> {
        validate_shapes(&self.layers)?;
        for (l, w) in self.layers.iter().enumerate() {
            if let Some(k) = w.data().iter().position(|v| !v.is_finite()) {
                return Err(PidError::NonFinite {
                    layer: l + 1,
                    row: k / w.cols(),
                    col: k % w.cols(),
                });
            }
        }
        if self
            .layers
            .iter()
            .all(|w| w.data().iter().all(|&v| v == 0.0))
        {
            return Err(PidError::AllZeroNetwork);
        }
        Ok(())
    }

    pub fn layers(&self) -> &[WeightMatrix] {
        &self.layers
    }

    /// Layer `l`, 1-based.
    pub fn layer(&self, l: usize) -> &WeightMatrix {
        &self.layers[l - 1]
    }

    pub fn biases(&self) -> Option<&[Vec<f64>]> {
        self.biases.as_deref()
    }

    pub fn meta(&self) -> &Map<String, Value> {
        &self.meta
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].cols()
    }

    /// Number of weight layers `L`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `[p_0 = d, p_1, ..., p_L]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.layers.len() + 1);
        w.push(self.input_dim());
        w.extend(self.layers.iter().map(WeightMatrix::cols));
        w
    }

    pub fn num_edges(&self) -> usize {
        self.layers.iter().map(|w| w.rows() * w.cols()).sum()
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.layers.iter().fold(0.0, |m, w| m.max(w.max_abs()))
    }

    pub fn same_architecture(&self, other: &NetworkSpec) -> bool {
        self.widths() == other.widths()
    }

    /// Returns a copy with every weight transformed by `f`; biases are kept.
    pub fn map_weights(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let layers = self.layers.iter().map(|w| w.map(&f)).collect();
        let mut net = NetworkSpec::new(layers)?;
        net.biases = self.biases.clone();
        net.meta = self.meta.clone();
        Ok(net)
    }
}

pub(crate) fn validate_shapes(layers: &[WeightMatrix]) -> Result<()> {
    if layers.is_empty() {
        return Err(PidError::EmptyNetwork);
    }
    for (l, w) in layers.iter().enumerate() {
        if w.rows() == 0 || w.cols() == 0 {
            return Err(PidError::ShapeMismatch {
                layer: l + 1,
                reason: format!("empty {}x{} matrix", w.rows(), w.cols()),
            });
        }
        if l > 0 && layers[l - 1].cols() != w.rows() {
            return Err(PidError::ShapeMismatch {
                layer: l + 1,
                reason: format!(
                    "has {} rows but layer {} has {} columns",
                    w.rows(),
                    l,
                    layers[l - 1].cols()
                ),
            });
        }
    }
    Ok(())
}
