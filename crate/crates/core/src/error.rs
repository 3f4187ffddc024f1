//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative numerical routine failed to converge or exceeded its
    /// residual budget. Carries the measured residual norm.
    #[error("numerical failure in {context}: residual {residual:e}")]
    NumericalFailure { context: String, residual: f64 },

    /// A persistent cache was opened with a fingerprint that does not match
    /// the requesting context. Silent reuse is refused.
    #[error("stale cache: fingerprint {found} does not match context {expected}")]
    StaleCache { expected: String, found: String },

    /// Cache storage I/O failed. The computed value is still usable; see
    /// [`crate::propagators::CacheOutcome`].
    #[error("cache I/O failure: {0}")]
    CacheIo(#[from] std::io::Error),

    /// A Metropolis chain accepted no move over a full batch.
    #[error(
        "sampler stuck: no accepted moves in batch {batch} \
         (|theta| = {theta_abs:e}, window = {window})"
    )]
    SamplerStuck {
        batch: usize,
        theta_abs: f64,
        window: usize,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
