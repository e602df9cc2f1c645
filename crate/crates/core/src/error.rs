use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid grid, weight or initial-data configuration.
    Config(String),
    /// A per-cell vector did not match the grid.
    Dimension { expected: usize, got: usize },
    /// Model parameter outside its admissible range (r ≤ 1, c > 1, ...).
    Parameter(String),
    /// Weight family without a Poincaré pathway in scope.
    UnsupportedWeight(String),
    /// A density value that must be positive was not.
    Positivity { cell: usize, value: f64 },
    /// An iterative method failed or produced a non-finite value.
    Numerical { what: String, residual: f64 },
    /// Too few usable points for a rate fit.
    Fit(String),
    /// The ball B(0,k) is too small to carry a probability density of the form e^{-aV}.
    TruncationTooSmall { radius: f64, volume: f64 },
    /// A conserved quantity drifted beyond its tolerance.
    Invariant(String),
    /// Failure inside one rung of a truncation ladder.
    Rung { radius: f64, source: Box<Error> },
}

/// Coarse grouping used by front ends to pick exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Configuration,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Rung { source, .. } => source.class(),
            Error::Config(_)
            | Error::Dimension { .. }
            | Error::Parameter(_)
            | Error::UnsupportedWeight(_)
            | Error::TruncationTooSmall { .. } => ErrorClass::Configuration,
            Error::Positivity { .. } | Error::Numerical { .. } | Error::Fit(_) | Error::Invariant(_) => {
                ErrorClass::Numerical
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Dimension { .. } => "dimension",
            Error::Parameter(_) => "parameter",
            Error::UnsupportedWeight(_) => "unsupported_weight",
            Error::Positivity { .. } => "positivity",
            Error::Numerical { .. } => "numerical",
            Error::Fit(_) => "fit",
            Error::TruncationTooSmall { .. } => "truncation_too_small",
            Error::Invariant(_) => "invariant",
            Error::Rung { source, .. } => source.kind(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) | Error::Parameter(msg) => f.write_str(msg),
            Error::Dimension { expected, got } => {
                write!(f, "expected {expected} per-cell values, got {got}")
            }
            Error::UnsupportedWeight(msg) => write!(f, "unsupported weight: {msg}"),
            Error::Positivity { cell, value } => {
                write!(f, "density not positive at cell {cell} (value {value:e})")
            }
            Error::Numerical { what, residual } => {
                write!(f, "{what} (last residual {residual:e})")
            }
            Error::Fit(msg) => write!(f, "rate fit failed: {msg}"),
            Error::TruncationTooSmall { radius, volume } => write!(
                f,
                "truncation radius {radius} too small: ball volume {volume} must exceed 1"
            ),
            Error::Invariant(msg) => write!(f, "invariant violated: {msg}"),
            Error::Rung { radius, source } => write!(f, "rung k = {radius}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Rung { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
