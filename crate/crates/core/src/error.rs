use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Closed forms are derived for free-space (`alpha = 2`) path loss only.
    #[error("closed form requires path-loss exponent 2, got {0}")]
    UnsupportedExponent(f64),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error {error:e})"
    )]
    NonConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    /// The operation is only defined for a single forwarding relay.
    #[error("exact-CSI selection is defined for k = 1 only, got k = {0}")]
    ExactCsiRequiresSingleRelay(u32),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
