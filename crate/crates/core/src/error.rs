use std::fmt;

use thiserror::Error;

/// Which oracle raised an [`OracleError`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleSide {
    Phi1,
    Phi2,
    XStep,
    ZStep,
}

impl fmt::Display for OracleSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            OracleSide::Phi1 => "phi1 prox",
            OracleSide::Phi2 => "phi2 prox",
            OracleSide::XStep => "x-step",
            OracleSide::ZStep => "z-step",
        };
        f.write_str(name)
    }
}

/// Failure inside a user- or builder-supplied oracle (e.g. a factorization
/// that is not positive definite for the requested step).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct OracleError(pub String);

impl OracleError {
    pub fn new(msg: impl Into<String>) -> Self {
        OracleError(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{side} failed: {source}")]
    Oracle {
        side: OracleSide,
        #[source]
        source: OracleError,
    },

    #[error("merit function evaluated to {value}; an oracle returned a point outside its domain")]
    NonFiniteMerit { value: f64 },

    #[error("direction engine returned a non-finite vector at iteration {iteration}")]
    NonFiniteDirection { iteration: usize },

    #[error("backtracking reached the nominal point without sufficient decrease at iteration {iteration} (c too close to C or stepsize outside its regime)")]
    BacktrackOverflow { iteration: usize },

    #[error("adaptive stepsize left [1e-12, 1e12] (gamma = {gamma}); the declared regime is inconsistent with the problem")]
    GammaOutOfRange { gamma: f64 },

    #[error("adaptive penalty left [1e-12, 1e12] (beta = {beta}); the declared regime is inconsistent with the problem")]
    BetaOutOfRange { beta: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("certificate unavailable: the solve did not converge")]
    CertificateUnavailable,
}

impl Error {
    pub(crate) fn oracle(side: OracleSide, source: OracleError) -> Self {
        Error::Oracle { side, source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
