use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{validate_shapes, NetworkSpec, WeightMatrix};
use crate::error::{PidError, Result};

pub const MODEL_FORMAT: &str = "json-v1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    layers: Vec<LayerFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    biases: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    meta: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NetworkSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| PidError::Parse(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(PidError::UnsupportedFormat(file.format));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for (l, lf) in file.layers.into_iter().enumerate() {
            if lf.data.len() != lf.rows * lf.cols {
                return Err(PidError::ShapeMismatch {
                    layer: l + 1,
                    reason: format!(
                        "declared {}x{} but holds {} values",
                        lf.rows,
                        lf.cols,
                        lf.data.len()
                    ),
                });
            }
            layers.push(WeightMatrix::new(lf.rows, lf.cols, lf.data)?);
        }
        validate_shapes(&layers)?;
        let mut net = NetworkSpec::new(layers)?;
        if let Some(b) = file.biases {
            net = net.with_biases(b)?;
        }
        Ok(net.with_meta(file.meta))
    }

    pub fn to_json_string(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            layers: self
                .layers()
                .iter()
                .map(|w| LayerFile {
                    rows: w.rows(),
                    cols: w.cols(),
                    data: w.data().to_vec(),
                })
                .collect(),
            biases: self.biases().map(<[_]>::to_vec),
            meta: self.meta().clone(),
        };
        serde_json::to_string(&file).expect("model serialization is infallible")
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PidError::io(path, e))?;
    NetworkSpec::from_json_str(&text)
}

pub fn save_network(net: &NetworkSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, net.to_json_string()).map_err(|e| PidError::io(path, e))
}
