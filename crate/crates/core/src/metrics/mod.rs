//! Measurements over finished runs and report emission.

mod bytes;
mod observe;
mod report;
mod series;
mod throughput;

pub use bytes::LedgerBytes;
pub use observe::{
    measure_confirmation_survival, measure_orphan_rate, measure_settlement_latency, ChainObservation,
    ChainRun, LatticeObservation, LatticeRun, RunView, SettlementLatency, SurvivalTally, Transfer,
    MAX_TRACKED_DEPTH, MIN_SURVIVAL_SAMPLES,
};
pub use report::{InvariantStatus, Paradigm, Scalar, ScenarioReport, CSV_HEADER};
pub use series::{MetricSeries, Summary};
pub use throughput::{tps_cap, MetricsError};

/// Canonical byte footprint of a node's retained ledger.
pub trait LedgerSize {
    fn ledger_bytes(&self) -> LedgerBytes;
}

impl LedgerSize for crate::chain::ChainStore {
    fn ledger_bytes(&self) -> LedgerBytes {
        crate::chain::ChainStore::ledger_bytes(self)
    }
}

impl LedgerSize for crate::lattice::Lattice {
    fn ledger_bytes(&self) -> LedgerBytes {
        crate::lattice::Lattice::ledger_bytes(self)
    }
}

pub fn measure_ledger_bytes(node: &impl LedgerSize) -> LedgerBytes {
    node.ledger_bytes()
}
