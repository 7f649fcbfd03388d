//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by dataset handling, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid PGM file {path}: {reason}")]
    Pgm { path: PathBuf, reason: String },

    #[error("dataset layout error at {path}: {reason}")]
    DatasetLayout { path: PathBuf, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The current direction annihilates every class offset; the objective
    /// denominator is zero.
    #[error("degenerate direction: all projected class offsets vanish")]
    DegenerateDirection,

    /// An iteration denominator fell below the zero threshold; the solver
    /// must perturb the iterate and retry.
    #[error("iterate too close to a zero denominator; perturbation required")]
    PerturbationRequired,

    #[error("no discriminant direction found after repeated perturbation")]
    NoDiscriminantDirection,

    #[error("iteration matrix is singular even after ridge fallback")]
    SingularIterationMatrix,

    #[error("singular within-class scatter; supply a positive ridge")]
    SingularWithinScatter,

    #[error("matrix columns are not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("config error in {path} (line {line}): {reason}")]
    Config {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid model file {path}: {reason}")]
    ModelFormat { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
