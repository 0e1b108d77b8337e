use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("height map has no nonzero roof pixel")]
    NoRoofData,
    #[error("mesh contains no non-degenerate triangle")]
    EmptyMesh,
    #[error("footprint contains no roof pixel")]
    EmptyFootprint,
    #[error("no known pixel to interpolate from")]
    NoData,
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid corruption spec: {0}")]
    InvalidSpec(String),
    #[error("incompleteness mask needs {requested} pixels but footprint has {available}")]
    InfeasibleMask { requested: usize, available: usize },
    #[error("incompleteness mask sampling stalled at {marked}/{requested} pixels")]
    MaskSamplingStalled { marked: usize, requested: usize },
    #[error("no pixel outside the footprint to plant a tree")]
    CannotPlaceTree,
    #[error("bad diffusion schedule: {0}")]
    BadSchedule(String),
    #[error("invalid denoiser config: {0}")]
    BadConfig(String),
    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },
    #[error("malformed {kind} data: {msg}")]
    Format { kind: &'static str, msg: String },
    #[error("duplicate manifest id `{0}`")]
    DuplicateId(String),
    #[error("manifest is missing column `{0}`")]
    MissingColumn(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            kind,
            msg: msg.into(),
        }
    }
}
