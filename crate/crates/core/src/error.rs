use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the evaluation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate segment: endpoints coincide at ({x}, {y})")]
    DegenerateSegment { x: f64, y: f64 },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },

    #[error("pixel ({u}, {v}) is outside the {width}x{height} image")]
    OutOfBounds {
        u: f64,
        v: f64,
        width: u32,
        height: u32,
    },

    #[error("heatmap shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((u32, u32), (u32, u32)),

    #[error("operation requires confidence scores on every detection")]
    ScoresRequired,

    #[error("metric is undefined: {0}")]
    UndefinedMetric(String),

    #[error("under-constrained pose problem: {0} usable correspondences, need at least 3")]
    UnderConstrained(usize),

    #[error("every correspondence projects behind the camera")]
    AllCorrespondencesInvalid,

    #[error("optimizer diverged (non-finite cost)")]
    Diverged,

    #[error("annotation error: {0}")]
    Annotation(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True when the error stems from malformed or inconsistent input data
    /// rather than from a failed computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::UnderConstrained(_)
                | Error::AllCorrespondencesInvalid
                | Error::Diverged
                | Error::UndefinedMetric(_)
        )
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
