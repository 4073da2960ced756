use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("halfplane list is empty")]
    NoHalfplanes,

    #[error("distance is undefined for an empty region")]
    EmptyRegion,

    #[error("direction vector has zero length")]
    ZeroDirection,

    #[error("level {alpha} outside the admissible range {range}")]
    InvalidAlpha { alpha: f64, range: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside the support of {dist}")]
    OutsideSupport { x: f64, y: f64, dist: &'static str },

    #[error("depth as an infimum is unsupported for negative weights")]
    NegativeWeights,

    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("projected density vanishes at boundary point ({x}, {y})")]
    RadonNonPositive { x: f64, y: f64 },

    #[error("unknown distribution tag `{0}`")]
    UnknownDistribution(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
