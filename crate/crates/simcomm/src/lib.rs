//! In-process simulation of the message-passing layer.
//!
//! Ranks run as threads connected by channels along a fixed binary reduction
//! tree. Two collectives are provided: a sum-allreduce (BCGS-PIP style
//! reduction) and a stateful tree reduction that solves a PQR problem at every
//! tree node (TreeTSPQR style). Every collective is counted, so the number of
//! global synchronizations, message rounds and bytes per solve can be checked.

mod group;
mod harness;
mod reduce;

pub use group::{CommStats, Communicator, Message, RankComm, RankGroup};
pub use harness::{allreduce_sum, assemble, distributed_block_qr, rank_offsets, DistributedQr, RankOutcome};
pub use reduce::{distributed_pqr, tree_reduce_pqr, DistState, Reduction, TreeReductionState};

use pqr::PqrError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Pqr(#[from] PqrError),
    #[error("expected {expected} ranks, got {got}")]
    RankCount { expected: usize, got: usize },
    #[error("a peer rank disconnected")]
    Disconnected,
    #[error("a rank panicked")]
    RankPanicked,
    #[error("inconsistent reduction state: {0}")]
    State(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
