use thiserror::Error;

use crate::model::ItemId;

/// Errors produced anywhere in the comparison model, the round harness or
/// the algorithms it drives.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid universe: n must be at least 1")]
    InvalidUniverse,

    #[error("self-comparison requested for item {0}")]
    SelfComparison(ItemId),

    #[error("item {item} is outside the universe of size {n}")]
    UnknownItem { item: ItemId, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("algorithm issued more than {max_rounds} rounds")]
    RoundLimitExceeded { max_rounds: u32 },

    #[error("rejected batch in round {round}, request {index}: {reason}")]
    RejectedBatch {
        round: u32,
        index: usize,
        reason: String,
    },

    #[error("outcome slice has {got} entries, expected {expected}")]
    OutcomeLength { expected: usize, got: usize },

    #[error("pivot partition is inconsistent: {0}")]
    PartitionInconsistency(String),

    #[error("budget {budget} is below the universe size {n}")]
    InsufficientBudget { budget: u64, n: usize },

    #[error("majority over {0} outcomes can tie")]
    TiePossible(usize),

    #[error("scaling fit needs at least 3 points, got {0}")]
    InsufficientData(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
