//! Deterministic simulation laboratory for two distributed-ledger designs: a
//! proof-of-work / proof-of-stake blockchain with longest-chain consensus, and
//! a block-lattice with weighted representative voting.

pub mod chain;
pub mod election;
pub mod lattice;
pub mod metrics;
pub mod primitives;
pub mod rng;
pub mod scenario;
pub mod simnet;
