use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no voxels selected")]
    EmptyMask,

    #[error("invalid label {value} at sample {index}: logistic labels must be -1 or +1")]
    InvalidLabel { index: usize, value: f64 },

    #[error("{0} requires the logistic family")]
    RequiresLogistic(&'static str),

    #[error("{0} requires the linear family")]
    RequiresLinear(&'static str),

    #[error("zero matrix has no dominant singular direction")]
    ZeroMatrix,

    #[error("divergence; check step size (non-finite iterate at step {step})")]
    Divergence { step: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("both classes must be present: {0}")]
    SingleClass(&'static str),

    #[error("missing ground truth: {0}")]
    MissingTruth(&'static str),

    #[error("undefined angle: {0}")]
    UndefinedAngle(&'static str),

    #[error("ambiguous phantom truth: voxel {0} is both lesion and bias")]
    OverlappingTruth(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

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

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
