use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PidError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PidError {
    #[error("failed to read or write {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed model file: {0}")]
    Parse(String),

    #[error("unsupported model format `{0}` (expected `json-v1`)")]
    UnsupportedFormat(String),

    #[error("layer {layer}: {reason}")]
    ShapeMismatch { layer: usize, reason: String },

    #[error("layer {layer} entry ({row}, {col}) is not finite")]
    NonFinite {
        layer: usize,
        row: usize,
        col: usize,
    },

    #[error("network has no nonzero weight")]
    AllZeroNetwork,

    #[error("network has no layers")]
    EmptyNetwork,

    #[error("filtration retains no edges (eta = {eta})")]
    EmptyFiltration { eta: f64 },

    #[error("layer index {layer} out of range 1..={max}")]
    LayerOutOfRange { layer: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("convolution: {0}")]
    Convolution(String),

    #[error("architectures differ: {0}")]
    ArchitectureMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("domain violation in F{fid} at sample {sample}: {detail}")]
    DomainViolation {
        fid: u8,
        sample: usize,
        detail: String,
    },

    #[error("degenerate ground truth: {0}")]
    DegenerateTruth(String),

    #[error("crossing order {order} exceeds the maximum of 4")]
    CrossingOrder { order: usize },
}

impl PidError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PidError::Io {
            path: path.into(),
            source,
        }
    }
}
