//! Error taxonomy shared by all modules.
//!
//! Diagnostics carry `f64` copies of the offending quantities so the enum
//! stays scalar-agnostic.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// `lambda` is too close to a zero of the characteristic function for
    /// the interface system to be solvable.
    #[error("lambda = {re}{im:+}i is within tolerance of an eigenvalue (|det| = {det_abs:.3e})")]
    NearEigenvalue { re: f64, im: f64, det_abs: f64 },

    /// An iteration failed to reach its tolerance.
    #[error("{what} did not converge: last = {last:.9e}, previous = {previous:.9e}")]
    NotConverged {
        what: String,
        last: f64,
        previous: f64,
    },

    /// A search cell could not be classified after the maximum number of
    /// subdivisions (contour too close to a zero of the characteristic).
    #[error(
        "indeterminate cell [{re_min}, {re_max}] x [{im_min}, {im_max}]i: \
         boundary passes within {min_abs:.3e} of a characteristic zero"
    )]
    IndeterminateCell {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        min_abs: f64,
    },

    /// A state failed a generator-domain condition.
    #[error("domain condition violated: {condition} (residual {residual:.3e})")]
    DomainCondition { condition: String, residual: f64 },

    /// A range check cannot be decided on the truncated grid.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// The density construction needs a longer heat domain than the cap.
    #[error(
        "epsilon too small: construction needs heat domain of length {needed_extent:.3e} \
         (cap {cap:.3e})"
    )]
    EpsilonTooSmall { needed_extent: f64, cap: f64 },

    /// Discrete energy bookkeeping failed, indicating a mis-configured run.
    #[error("energy balance drift {drift:.3e} exceeds tolerance {tolerance:.3e}")]
    EnergyDrift { drift: f64, tolerance: f64 },

    /// The heat front reached the truncated far boundary.
    #[error(
        "truncation reflection: |w| = {amplitude:.3e} in the far 10% of the heat domain \
         exceeds {threshold:.3e}; increase heat_l"
    )]
    TruncationReflection { amplitude: f64, threshold: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
