//! Crate-wide error type.

use thiserror::Error;

/// Errors from library operations. Physics non-existence (no well) is
/// reported through data where an operation defines that, and through
/// [`Error::WellDoesNotExist`] where a well is a hard precondition.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("incompatible units: cannot convert {from} to {to}")]
    IncompatibleUnits { from: String, to: String },

    #[error("unknown unit suffix in {0:?}")]
    UnknownUnit(String),

    #[error("malformed quantity {0:?}: expected <number><unit>, e.g. \"26uK\"")]
    MalformedQuantity(String),

    #[error("magnetic gradient must be non-negative, got {0} T/m")]
    NegativeGradient(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("potential has no trapping well for this configuration")]
    WellDoesNotExist,

    #[error("ensemble already evolved to t = {time} s; expected t = 0")]
    EnsembleEvolved { time: f64 },

    #[error("no trapped atoms in ensemble")]
    EmptyTrappedSet,

    #[error("histogram bin specification needs at least 2 edges, got {0}")]
    EmptyBins(usize),

    #[error("time-of-flight fit needs at least 2 distinct times")]
    DegenerateTofFit,

    #[error(
        "deconvolution is ill-conditioned: spectrum of the initial profile \
         crosses zero with epsilon = 0; raise epsilon (default 1e-3)"
    )]
    IllConditionedDeconvolution,

    #[error("deconvolution profiles must share one bin grid: {0}")]
    MismatchedGrids(String),

    #[error("measurement window is not finite: {0}")]
    WindowNotFinite(String),

    #[error("sweep axis invalid: {0}")]
    InvalidAxis(String),

    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
