use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the domain on axis {axis}")]
    OutsideDomain { point: Vec<f64>, axis: usize },

    #[error("evaluation failed at node {node} ({what}): {reason}")]
    Evaluation {
        node: usize,
        what: String,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("malformed expression: {0}")]
    Malformed(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("direction {direction:?} leaves the domain immediately at {point:?}")]
    InfeasibleDirection {
        point: Vec<f64>,
        direction: Vec<f64>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("certification refused: annulus minimum {annulus_min} does not exceed f(x*) = {f_star} (violating point {point:?})")]
    CertificationRefused {
        annulus_min: f64,
        f_star: f64,
        point: Vec<f64>,
    },

    #[error("unknown zoo entry `{0}`")]
    UnknownEntry(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for the errors that mean "the input is outside what the function accepts".
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::OutsideDomain { .. }
                | Error::Evaluation { .. }
                | Error::InfeasibleDirection { .. }
        )
    }
}

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

pub type Result<T> = std::result::Result<T, Error>;
