//! Block-lattice ledger: one chain per account, two-phase send/receive
//! settlement, representative-weighted conflict votes, cementing, and
//! head-only pruning.

mod block;
mod ledger;
mod voting;

pub use block::{account_root, LatticeAction, LatticeBlock};
pub use ledger::{
    AccountChain, Election, ElectionOutcome, GenesisAccount, Lattice, LatticeError,
    LatticeParams, LatticePruneReport, LatticeVerdict, NodeTier, PendingSend, ProcessOutcome,
    DEFAULT_GAP_BUFFER, DEFAULT_QUORUM, PRUNED_INDEX_ENTRY_BYTES,
};
pub use voting::{resolve_fork, ForkResolution, VoteRecord};
