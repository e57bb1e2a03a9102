use std::fmt::Write as _;

use super::PersistenceLedger;
use crate::error::{PidError, Result};

/// Per-pixel sum of the strengths of all candidates containing the pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub height: usize,
    pub width: usize,
    /// Row-major raw importances.
    pub values: Vec<f64>,
}

pub fn saliency(ledger: &PersistenceLedger, height: usize, width: usize) -> Result<SaliencyMap> {
    let d = ledger.num_features();
    if height * width != d {
        return Err(PidError::DimensionMismatch {
            expected: d,
            got: height * width,
        });
    }
    let mut values = vec![0.0; d];
    for (cand, &rho) in ledger.iter() {
        for &i in cand.features() {
            values[i] += rho;
        }
    }
    Ok(SaliencyMap {
        height,
        width,
        values,
    })
}

impl SaliencyMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Scaled so the maximum is 1; an all-zero map stays zero.
    pub fn normalized(&self) -> Vec<f64> {
        let max = self.values.iter().fold(0.0_f64, |m, &v| m.max(v));
        if max <= 0.0 {
            return vec![0.0; self.values.len()];
        }
        self.values.iter().map(|&v| v / max).collect()
    }

    /// Max-normalized grid, one CSV row per image row.
    pub fn to_csv(&self) -> String {
        let norm = self.normalized();
        let mut out = String::new();
        for row in norm.chunks(self.width) {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Binary 8-bit greyscale PGM (`P5`), max-normalized.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(
            self.normalized()
                .iter()
                .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
        );
        out
    }
}
