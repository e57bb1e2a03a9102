//! Tabular datasets shared by the trainer and the benchmark suite.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PidError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Dense,
    /// Integer-coded categorical values.
    Sparse,
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub function: Option<u8>,
    pub seed: Option<u64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    n: usize,
    d: usize,
    /// Row-major `n x d`.
    x: Vec<f64>,
    y: Vec<f64>,
    names: Vec<String>,
    kinds: Vec<FeatureKind>,
    pub provenance: Provenance,
}

impl DatasetSpec {
    pub fn new(d: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if x.len() != n * d {
            return Err(PidError::DimensionMismatch {
                expected: n * d,
                got: x.len(),
            });
        }
        if let Some(k) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(PidError::InvalidArgument(format!(
                "dataset value #{k} is not finite"
            )));
        }
        Ok(DatasetSpec {
            n,
            d,
            x,
            y,
            names: (0..d).map(|i| format!("x{i}")).collect(),
            kinds: vec![FeatureKind::Dense; d],
            provenance: Provenance::default(),
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_features(&self) -> usize {
        self.d
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.x[i * self.d + j]).collect()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn set_kind(&mut self, j: usize, kind: FeatureKind) {
        self.kinds[j] = kind;
    }

    /// Appends a column; its length must equal the sample count.
    pub fn push_column(&mut self, name: String, kind: FeatureKind, values: &[f64]) -> Result<()> {
        if values.len() != self.n {
            return Err(PidError::DimensionMismatch {
                expected: self.n,
                got: values.len(),
            });
        }
        let d = self.d;
        let mut x = Vec::with_capacity(self.n * (d + 1));
        for (i, &v) in values.iter().enumerate() {
            x.extend_from_slice(&self.x[i * d..(i + 1) * d]);
            x.push(v);
        }
        self.x = x;
        self.d += 1;
        self.names.push(name);
        self.kinds.push(kind);
        Ok(())
    }

    /// Contiguous sample range as its own dataset.
    pub fn slice(&self, start: usize, end: usize) -> DatasetSpec {
        DatasetSpec {
            n: end - start,
            d: self.d,
            x: self.x[start * self.d..end * self.d].to_vec(),
            y: self.y[start..end].to_vec(),
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Consecutive train / validation / test blocks. Samples are i.i.d., so
    /// no shuffling is needed.
    pub fn split(&self, val_fraction: f64, test_fraction: f64) -> Result<Split> {
        if !(val_fraction > 0.0 && test_fraction > 0.0 && val_fraction + test_fraction < 1.0) {
            return Err(PidError::InvalidArgument(format!(
                "bad split fractions {val_fraction} / {test_fraction}"
            )));
        }
        let n_val = (self.n as f64 * val_fraction).round() as usize;
        let n_test = (self.n as f64 * test_fraction).round() as usize;
        let n_train = self.n.saturating_sub(n_val + n_test);
        if n_train == 0 || n_val == 0 || n_test == 0 {
            return Err(PidError::InvalidArgument(format!(
                "{} samples are too few to split",
                self.n
            )));
        }
        Ok(Split {
            train: self.slice(0, n_train),
            val: self.slice(n_train, n_train + n_val),
            test: self.slice(n_train + n_val, self.n),
        })
    }

    /// Header `x0,...,x{d-1},y` (or the column names) then one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.d + 1) * 12);
        out.push_str(&self.names.join(","));
        out.push_str(",y\n");
        for i in 0..self.n {
            for v in self.row(i) {
                write!(out, "{v},").unwrap();
            }
            writeln!(out, "{}", self.y[i]).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| PidError::Parse("empty dataset file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.last() != Some(&"y") || cols.len() < 2 {
            return Err(PidError::Parse("last column must be `y`".into()));
        }
        let d = cols.len() - 1;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (ln, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| PidError::Parse(format!("row {}: {e}", ln + 1)))?;
            if vals.len() != d + 1 {
                return Err(PidError::Parse(format!(
                    "row {} has {} fields, expected {}",
                    ln + 1,
                    vals.len(),
                    d + 1
                )));
            }
            x.extend_from_slice(&vals[..d]);
            y.push(vals[d]);
        }
        let mut ds = DatasetSpec::new(d, x, y)?;
        ds.names = cols[..d].iter().map(|s| s.to_string()).collect();
        for (k, name) in ds.names.iter().enumerate() {
            if name.starts_with("cross_") {
                ds.kinds[k] = FeatureKind::Sparse;
            }
        }
        Ok(ds)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PidError::io(path, e))?;
        DatasetSpec::from_csv(&text)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| PidError::io(path, e))
    }

    /// Population variance of the targets.
    pub fn target_variance(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let mean = self.y.iter().sum::<f64>() / self.n as f64;
        self.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.n as f64
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: DatasetSpec,
    pub val: DatasetSpec,
    pub test: DatasetSpec,
}
