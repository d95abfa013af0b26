use thiserror::Error;

/// Errors raised by the optimizer and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("domain error in {function}: argument {value} out of range")]
    Domain { function: &'static str, value: f64 },

    #[error("mean observation duration undefined: per-slot success probability is zero")]
    UndefinedObservationDuration,

    #[error("contention did not succeed within {0} slots")]
    SlotLimit(u64),

    #[error("small-scale phase aborted after {0} contentions without a stop")]
    PhaseAborted(u64),

    #[error("no sign change while bracketing {what} (last probe at {probe})")]
    NoBracket { what: &'static str, probe: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {estimate}, error {error} after {intervals} intervals")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("fixed-point iteration did not converge in {iters} iterations (last residual {residual})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("look-up table: {0}")]
    LookupTable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
