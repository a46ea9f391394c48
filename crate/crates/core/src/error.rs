use thiserror::Error;

use crate::properties::SeriesTruncation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("parameter index {index} is out of range (family has {len} parameters)")]
    ParameterIndex { index: usize, len: usize },

    #[error("expected {expected} generator parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },

    #[error("unknown {kind} identifier `{name}`")]
    UnknownIdentifier { kind: &'static str, name: String },

    #[error("numerical integration did not converge (estimated error {error:e})")]
    Quadrature { error: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(&'static str),

    #[error("series did not converge: {reason}")]
    SeriesNonConvergent {
        reason: String,
        report: SeriesTruncation,
    },

    #[error("fit did not converge after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("observed information matrix is not positive definite")]
    SingularInformation,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "(0, inf)",
        })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "[0, inf)",
        })
    }
}
