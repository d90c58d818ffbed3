use thiserror::Error;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A pre-normalization vector vanished, so its direction is undefined.
    #[error("degenerate direction{}", index.map(|i| format!(" at point {i}")).unwrap_or_default())]
    DegenerateDirection { index: Option<usize> },

    #[error("point set has zero spread")]
    ZeroSpread,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("feature basis lacks closed-form derivatives; use a finite-difference Jacobian")]
    MissingDerivative,

    /// The objective became NaN or infinite. Carries the last finite parameter vector.
    #[error("objective became non-finite")]
    NonFinite { last_good: Vec<f64> },

    #[error("every point is degenerate at the initial pose")]
    Degenerate,

    #[error("no consensus: best hypothesis kept {inlier_fraction:.3} of the points")]
    NoConsensus { inlier_fraction: f64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
