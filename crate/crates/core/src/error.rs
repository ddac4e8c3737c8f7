use thiserror::Error;

use crate::moebius::ElementClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("determinant deviates from 1 by {deviation:e}")]
    Determinant { deviation: f64 },

    #[error("point is mapped to the sphere at infinity")]
    PointAtInfinity,

    #[error("{0:?} element has no complex translation length")]
    NotLoxodromic(ElementClass),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported hypergeometric parameters (a={a}, b={b})")]
    UnsupportedParameters { a: f64, b: f64 },

    #[error("result overflows double precision: {0}")]
    Overflow(String),

    #[error(
        "element budget of {budget} exhausted after {count} elements; \
         complete to radius {radius_reached:.4} of {radius_target:.4}"
    )]
    Budget {
        budget: usize,
        count: usize,
        radius_reached: f64,
        radius_target: f64,
    },

    #[error("length {requested} exceeds spectrum cutoff {cutoff}")]
    Range { requested: f64, cutoff: f64 },

    #[error("{0} requires real p > 0")]
    Mode(&'static str),

    #[error("need {needed} eigenvalues, got {got}")]
    Count { needed: usize, got: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("fit did not converge after {iterations} iterations (last parameters {last:?})")]
    NoConvergence { iterations: usize, last: Vec<f64> },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
