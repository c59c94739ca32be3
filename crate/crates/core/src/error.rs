use thiserror::Error;

/// Errors raised by the process library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller violated an API contract (wrong arity, too-short input, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Summary statistics sit on a boundary where the moment equations cannot be inverted.
    #[error("degenerate statistics: {0}")]
    Degenerate(String),

    /// Summary statistics are incompatible with the model family.
    #[error("infeasible statistics: {0}")]
    Infeasible(String),

    /// Malformed input data.
    #[error("input error: {0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Prefix the message with extra context, keeping the variant.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Usage(m) => Error::Usage(format!("{ctx}: {m}")),
            Error::Degenerate(m) => Error::Degenerate(format!("{ctx}: {m}")),
            Error::Infeasible(m) => Error::Infeasible(format!("{ctx}: {m}")),
            Error::Input(m) => Error::Input(format!("{ctx}: {m}")),
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{ctx}: {e}"))),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Reject non-finite or non-positive values.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must be a positive finite number, got {value}")))
    }
}

/// Reject values outside the open unit interval.
pub(crate) fn require_open_unit(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must lie strictly inside (0, 1), got {value}")))
    }
}
