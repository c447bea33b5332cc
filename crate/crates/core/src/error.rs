use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("x = {x} lies outside the shape support |x| < {support}")]
    Domain { x: f64, support: f64 },

    #[error("x = {x} lies outside the window [{lo}, {hi}]")]
    OutsideWindow { x: f64, lo: f64, hi: f64 },

    #[error("no translate of the shape passes through ({j}, {h_j}) and ({k}, {h_k})")]
    UnreachablePair { j: f64, h_j: f64, k: f64, h_k: f64 },

    #[error(
        "root finding did not converge on [{lo}, {hi}] (g(lo) = {g_lo}, g(hi) = {g_hi}) after {iterations} iterations"
    )]
    RootFind {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        iterations: usize,
    },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error estimate {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("Wulff profile interpolation error {achieved:e} exceeds tolerance {tolerance:e}")]
    ProfileTooCoarse { achieved: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Numeric failures (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::RootFind { .. }
                | Error::Quadrature { .. }
                | Error::ProfileTooCoarse { .. }
                | Error::Internal(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
