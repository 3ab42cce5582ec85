use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution parameters: {0}")]
    InvalidDistribution(String),

    #[error("degenerate law after truncation at level {level}: standard deviation is zero")]
    DegenerateTruncation { level: f64 },

    #[error("invalid Wigner specification: {0}")]
    InvalidSpec(String),

    #[error("eigenvalue {index} did not converge after {iterations} QL iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("invalid smoothing-inequality constants: {0}")]
    InvalidConstants(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("point outside the admissible regime: {0}")]
    OutOfRegime(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("replica (n = {n}, r = {replica}) failed: {source}")]
    Replica {
        n: usize,
        replica: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed file {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
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
