//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Parameters violate a documented numeric domain (e.g. `M < n`).
    #[error("domain error: {0}")]
    Domain(String),

    /// An exact-mode or enumeration budget was exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Every trial in a batch hit the step cap, so no samples were produced.
    #[error(
        "all {trials} trials hit the step cap {step_cap}; raise the cap or pick a faster regime"
    )]
    AllTrialsTruncated { trials: u64, step_cap: u64 },

    /// A statistic was requested on an empty sample.
    #[error("empty sample")]
    EmptySample,

    /// An internal consistency check failed; this is a bug.
    #[error("internal error: {0}")]
    Internal(String),
}
