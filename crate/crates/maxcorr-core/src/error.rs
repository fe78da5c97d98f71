use thiserror::Error;

/// Errors from the estimation routines themselves.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("epsilon must lie in (0, 2), got {0}")]
    InvalidEpsilon(f64),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("quantile level must lie in (0, 1), got {0}")]
    InvalidQuantile(f64),
    #[error("need at least 4 observations, got {0}")]
    SampleTooSmall(usize),
    #[error("chunk count must be at least 1")]
    InvalidChunkCount,
    #[error("floor must be positive and finite, got {0}")]
    InvalidFloor(f64),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("observation has {got} predictors, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("standard deviation must be positive and finite")]
    NonPositiveSigma,
    #[error("no terms accumulated")]
    Empty,
    #[error("stream ended after {got} of {expected} observations")]
    ShortStream { expected: usize, got: usize },
    #[error("summary has a zero standard deviation")]
    ZeroStdDev,
}

/// Error from the streaming driver: either one of ours, or a failure of the
/// observation source (e.g. a malformed CSV row).
#[derive(Debug, Error)]
pub enum EstError<E> {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("observation source failed: {0}")]
    Source(E),
}
