use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input slices have the wrong length or shape.
    #[error("input shape: {0}")]
    InputShape(String),
    /// Invalid input values (duplicate indices, overlapping sets, oversized counts).
    #[error("invalid input: {0}")]
    Input(String),
    /// Invalid configuration (frame geometry, parameters, priors).
    #[error("configuration: {0}")]
    Config(String),
    /// The requested metric is undefined for this input.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    /// A normal matrix is numerically singular.
    #[error("singular system (condition estimate {condition:.3e}) for tone set {indices:?}")]
    Singular { condition: f64, indices: Vec<usize> },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Singular { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
