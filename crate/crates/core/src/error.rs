use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Structural problem with a model (non-invertible scale, bad start point, ...).
    #[error("model error: {0}")]
    Model(String),

    /// The model uses a segment kind or composition the catalog cannot handle.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Quadrature failed to converge or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    /// Model file syntax or schema problem, with 1-based line number.
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
