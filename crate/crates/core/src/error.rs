//! Error type shared by every module of the crate.

use alloc::string::String;
use thiserror::Error;

/// Errors raised by model construction, evaluation and search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A probability argument fell outside `[0, 1]` (or was NaN).
    #[error("probability out of range [0, 1]: {0}")]
    Domain(f64),

    /// The chain `p01 = 0, p11 = 1` never mixes, so it has no unique stationary law.
    #[error("singular chain (p01 = 0, p11 = 1): no unique stationary distribution")]
    SingularChain,

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The brute-force search would expand more nodes than allowed.
    #[error("node budget exceeded: {required} nodes required, budget is {budget}")]
    Budget {
        /// Nodes the request needs.
        required: u64,
        /// Configured ceiling.
        budget: u64,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
