use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants carry owned strings so results can be cloned into sweep and
/// benchmark reports without losing the original message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("distance {distance} m not reached (maximum descent {max_descent} m)")]
    NotReached { distance: f64, max_descent: f64 },

    #[error("value {value} outside calibrated range [{low}, {high}]")]
    OutOfRange { value: f64, low: f64, high: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("simulation failed at step {step}: {message}")]
    Simulation { step: usize, message: String },

    #[error("root search failed: {0}")]
    Search(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Io(err.to_string())
    }
}
