use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepSize { dt: f64, bound: f64 },

    #[error("solution blew up after t = {last_valid_time}")]
    Blowup { last_valid_time: f64 },

    #[error("initial guess failed: {0}")]
    GuessFailure(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("decomposition did not converge after {iterations} iterations (residual {residual:e})")]
    DecompositionFailure {
        iterations: usize,
        residual: f64,
        last_speeds: Vec<f64>,
        last_positions: Vec<f64>,
    },

    #[error("eigensolver failed: {0}")]
    SpectralFailure(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed container: {0}")]
    Format(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
