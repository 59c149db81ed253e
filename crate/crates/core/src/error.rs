use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlapError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("unsupported potential: {0}")]
    UnsupportedPotential(String),

    #[error("invalid potential parameters: {0}")]
    InvalidPotential(String),

    #[error("no descent direction after {doublings} doublings (last energy {last_energy})")]
    NoDescentDirection { doublings: usize, last_energy: f64 },

    #[error("mountain-pass geometry violated: {0}")]
    GeometryViolated(String),

    #[error("anticoercivity not detected: {0}")]
    AnticoercivityNotDetected(String),

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("missing parameter: {0}")]
    MissingParameter(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, PlapError>;

impl From<std::io::Error> for PlapError {
    fn from(e: std::io::Error) -> Self {
        PlapError::Io(e.to_string())
    }
}

impl From<csv::Error> for PlapError {
    fn from(e: csv::Error) -> Self {
        PlapError::Io(e.to_string())
    }
}
