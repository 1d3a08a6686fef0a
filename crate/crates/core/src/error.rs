use thiserror::Error;

/// Errors raised by the model operations (battery, converter, strategies).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its invariant. `field` names the offending
    /// parameter using the dotted scenario path where one exists.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("phase shift {phi} is outside the allowed range ±{limit}")]
    PhaseOutOfRange { phi: f64, limit: f64 },

    #[error("demand of {requested:.3} A exceeds converter capability (max_current = {max_current:.3} A)")]
    ExceedsCapability { requested: f64, max_current: f64 },

    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Shorthand for the common "must be finite and strictly positive" check.
pub(crate) fn ensure_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be > 0, got {value}")))
    }
}

pub(crate) fn ensure_finite(field: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite, got {value}"),
        ))
    }
}
