use thiserror::Error;

/// Errors raised by the library. Preconditions that the caller can check
/// up front are reported as [`Error::Domain`]; everything else describes a
/// runtime condition of a simulation or estimator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} outside its domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("population cap of {cap} particles exceeded; partial results discarded")]
    PopulationCap { cap: usize },

    #[error("no particle alive at time {t}")]
    Extinct { t: f64 },

    #[error("time {t} is not a recorded time of this tree")]
    TimeNotRecorded { t: f64 },

    #[error("insufficient conditioning mass: 0 of {n} samples satisfied the conditioning event")]
    InsufficientConditioningMass { n: usize },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}
