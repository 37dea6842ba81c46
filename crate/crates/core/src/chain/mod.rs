//! Blockchain ledger: block assembly and validation, longest-chain adoption
//! with reorgs, confirmation depth, state deltas, pruning and fast sync.

mod block;
mod mempool;
mod state;
mod store;
mod sync;

pub use block::{Block, BlockHeader, ChainTransaction, RootKind, Verdict};
pub use mempool::{assemble_block, assemble_from, BlockTemplate, Mempool};
pub use state::{AccountChange, AccountState, LedgerState, StateDelta};
pub use store::{
    AdoptionReport, ChainError, ChainParams, ChainStore, ConfirmationError, Consensus,
    PruneReport, DEFAULT_CONFIRM_THRESHOLD, DEFAULT_PIVOT_OFFSET, DEFAULT_PRUNE_SAFETY_WINDOW,
    GENESIS_PRODUCER,
};
pub use sync::{fast_sync, full_replay, SyncMode, SyncReport};
