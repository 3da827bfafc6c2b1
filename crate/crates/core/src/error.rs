use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A conditioning probability used as an IPW denominator is zero.
    #[error("degenerate conditioning probabilities (p_H = {p_high}, p_L = {p_low})")]
    DegenerateConditioning { p_high: f64, p_low: f64 },

    #[error("empty batch")]
    EmptyBatch,

    #[error(
        "{undetermined} of {replications} replications did not settle on an equilibrium \
         (limit is 20%); increase the horizon N"
    )]
    TooManyUndetermined {
        undetermined: usize,
        replications: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
