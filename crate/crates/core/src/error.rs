use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("window [{s}, {t}] outside [0, {horizon}]")]
    Window { s: f64, t: f64, horizon: f64 },
    #[error("exponent must be >= 1, got {0}")]
    Exponent(f64),
    #[error("regularity 1/p + 1/q = {0} must exceed 1")]
    Regularity(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("picard iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("residual check {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
    #[error("sampler rejected {rejected} of {drawn} draws")]
    Sampler { rejected: usize, drawn: usize },
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
