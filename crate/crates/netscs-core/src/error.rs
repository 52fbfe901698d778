//! Error type shared by every engine in the crate.

use core::fmt;

/// Errors reported by validation and by the numerical engines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument is out of its admissible range. The payload names
    /// the offending field.
    InvalidParameter(&'static str),
    /// A grid cannot represent the requested density (support too narrow,
    /// too few nodes, or mass escaping the support during propagation).
    InvalidGrid(&'static str),
    /// Truncation to `[-eta, eta]` would leave (almost) no probability mass;
    /// the threshold sits too far in the tail of the current density. The
    /// payload is the interior mass that was found.
    DegenerateTruncation(f64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::InvalidGrid(what) => write!(f, "invalid grid: {what}"),
            Error::DegenerateTruncation(mass) => {
                write!(f, "degenerate truncation: interior mass {mass:e}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
