use alloc::string::String;
use core::fmt;

/// Everything that can go wrong inside the analytic pipeline or the simulator.
#[derive(Clone, Debug, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain(String),
    /// A parameter record violates one of its invariants; the message names the constraint.
    InvalidParams(String),
    /// The offered load `λa/v` is not below one, so no root `z₀ > 1` (and no
    /// stationary infinite-queue vector) exists.
    NoRoot { load: f64 },
    /// The truncated embedded solve did not converge before the level cap.
    Truncation { level: usize },
    /// Every candidate of an optimization was infeasible or invalid.
    NoValidPoint,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    /// True for errors caused by bad input rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::InvalidParams(_))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::NoRoot { load } => write!(
                f,
                "offered load λa/v = {load} is not below 1; no characteristic root beyond 1 exists"
            ),
            Error::Truncation { level } => {
                write!(
                    f,
                    "truncated embedded solve did not converge by level {level}"
                )
            }
            Error::NoValidPoint => write!(f, "no candidate produced a valid objective value"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
