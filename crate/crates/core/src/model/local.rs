//! Per-sample activations and activation-weighted edge strengths.

use super::{NetworkSpec, WeightMatrix};
use crate::error::{PidError, Result};

/// Activations of one forward pass. `pre[k]` / `post[k]` belong to weight
/// layer `k + 1`; `post` is `ReLU(pre)` for every layer, including the last.
/// The network's (linear) output is [`ActivationTrace::output`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ActivationTrace {
    pub fn output(&self) -> &[f64] {
        self.pre.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn forward_activations(net: &NetworkSpec, x: &[f64]) -> Result<ActivationTrace> {
    if x.len() != net.input_dim() {
        return Err(PidError::DimensionMismatch {
            expected: net.input_dim(),
            got: x.len(),
        });
    }
    let mut pre = Vec::with_capacity(net.depth());
    let mut post = Vec::with_capacity(net.depth());
    let mut current = x.to_vec();
    for (k, w) in net.layers().iter().enumerate() {
        let mut z = w.left_mul(&current);
        if let Some(b) = net.biases() {
            for (zi, bi) in z.iter_mut().zip(&b[k]) {
                *zi += bi;
            }
        }
        let a: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
        pre.push(z);
        current = a.clone();
        post.push(a);
    }
    Ok(ActivationTrace {
        input: x.to_vec(),
        pre,
        post,
    })
}

/// Edge strengths `|W^(l)_{ij}| * ReLU(z^{l-1}_i)` before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalNetworkSpec {
    layers: Vec<WeightMatrix>,
}

impl LocalNetworkSpec {
    pub fn layers(&self) -> &[WeightMatrix] {
        &self.layers
    }

    /// Fails with [`PidError::AllZeroNetwork`] when every path is dead.
    pub fn to_network(&self) -> Result<NetworkSpec> {
        NetworkSpec::new(self.layers.clone())
    }
}

pub fn local_weights(net: &NetworkSpec, trace: &ActivationTrace) -> Result<LocalNetworkSpec> {
    if trace.input.len() != net.input_dim() {
        return Err(PidError::DimensionMismatch {
            expected: net.input_dim(),
            got: trace.input.len(),
        });
    }
    if trace.post.len() != net.depth() || trace.pre.len() != net.depth() {
        return Err(PidError::DimensionMismatch {
            expected: net.depth(),
            got: trace.post.len(),
        });
    }
    let mut layers = Vec::with_capacity(net.depth());
    for (k, w) in net.layers().iter().enumerate() {
        let source: Vec<f64> = if k == 0 {
            trace.input.iter().map(|&v| v.max(0.0)).collect()
        } else {
            trace.post[k - 1].clone()
        };
        if source.len() != w.rows() {
            return Err(PidError::ShapeMismatch {
                layer: k + 1,
                reason: format!(
                    "trace has {} source activations, layer has {} rows",
                    source.len(),
                    w.rows()
                ),
            });
        }
        let mut m = WeightMatrix::zeros(w.rows(), w.cols());
        for (i, &a) in source.iter().enumerate() {
            if a <= 0.0 {
                continue;
            }
            for j in 0..w.cols() {
                m.set(i, j, w.get(i, j).abs() * a);
            }
        }
        layers.push(m);
    }
    Ok(LocalNetworkSpec { layers })
}
