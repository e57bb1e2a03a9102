//! Dense equivalent of a 2-D convolution.
//!
//! A kernel applied without padding is a linear map from the flattened input
//! (`C_in * H * W`, channel-major) to the flattened output
//! (`C_out * H_out * W_out`). Writing that map as a matrix lets convolutional
//! layers enter the same weighted-DAG machinery as dense ones.

use super::WeightMatrix;
use crate::error::{PidError, Result};

/// `C_out x C_in x h x w` kernel, row-major in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    pub out_channels: usize,
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl ConvKernel {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != out_channels * in_channels * height * width {
            return Err(PidError::Convolution(format!(
                "kernel {out_channels}x{in_channels}x{height}x{width} needs {} values, got {}",
                out_channels * in_channels * height * width,
                data.len()
            )));
        }
        Ok(ConvKernel {
            out_channels,
            in_channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn get(&self, co: usize, ci: usize, ky: usize, kx: usize) -> f64 {
        self.data[((co * self.in_channels + ci) * self.height + ky) * self.width + kx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl InputShape {
    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvParams {
    pub stride: usize,
    pub padding: usize,
    pub dilation: usize,
}

impl Default for ConvParams {
    fn default() -> Self {
        ConvParams {
            stride: 1,
            padding: 0,
            dilation: 1,
        }
    }
}

impl ConvParams {
    pub fn with_stride(stride: usize) -> Self {
        ConvParams {
            stride,
            ..Default::default()
        }
    }
}

/// Builds the `(C_in*H*W) x (C_out*H_out*W_out)` matrix `M` with
/// `flatten(x) · M == flatten(conv(x))` (cross-correlation, as in common
/// deep-learning frameworks).
pub fn flatten_conv(
    kernel: &ConvKernel,
    input: InputShape,
    params: ConvParams,
) -> Result<WeightMatrix> {
    if params.padding != 0 {
        return Err(PidError::Convolution(format!(
            "padding {} is not supported",
            params.padding
        )));
    }
    if params.dilation != 1 {
        return Err(PidError::Convolution(format!(
            "dilation {} is not supported",
            params.dilation
        )));
    }
    if params.stride == 0 {
        return Err(PidError::Convolution("stride must be positive".into()));
    }
    if kernel.in_channels != input.channels {
        return Err(PidError::Convolution(format!(
            "kernel expects {} input channels, input has {}",
            kernel.in_channels, input.channels
        )));
    }
    if kernel.height > input.height || kernel.width > input.width {
        return Err(PidError::Convolution(format!(
            "kernel {}x{} larger than input {}x{}",
            kernel.height, kernel.width, input.height, input.width
        )));
    }
    if kernel.height == 0 || kernel.width == 0 || kernel.out_channels == 0 {
        return Err(PidError::Convolution("empty kernel".into()));
    }

    let s = params.stride;
    let h_out = (input.height - kernel.height) / s + 1;
    let w_out = (input.width - kernel.width) / s + 1;
    let rows = input.len();
    let cols = kernel.out_channels * h_out * w_out;
    let mut m = WeightMatrix::zeros(rows, cols);

    for co in 0..kernel.out_channels {
        for oy in 0..h_out {
            for ox in 0..w_out {
                let col = (co * h_out + oy) * w_out + ox;
                for ci in 0..kernel.in_channels {
                    for ky in 0..kernel.height {
                        for kx in 0..kernel.width {
                            let iy = oy * s + ky;
                            let ix = ox * s + kx;
                            let row = (ci * input.height + iy) * input.width + ix;
                            m.set(row, col, kernel.get(co, ci, ky, kx));
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}
