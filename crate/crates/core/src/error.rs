use thiserror::Error;

/// Errors raised by the key-rate pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("truncation failure in {context}: error bound {bound:e} exceeds tolerance {tolerance:e}")]
    Truncation {
        context: String,
        bound: f64,
        tolerance: f64,
    },

    #[error("quadrature failure in {context}: estimated error {error:e} on value {value:e}")]
    Quadrature { context: String, value: f64, error: f64 },

    #[error("gain undefined: baseline key rate is zero")]
    ZeroBaseline,
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (truncation or quadrature) as opposed
    /// to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Truncation { .. } | Error::Quadrature { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
