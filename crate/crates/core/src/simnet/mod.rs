//! Deterministic discrete-event network simulator.

mod link;
mod network;
mod scheduler;

pub use link::{LinkModel, Partition, Topology};
pub use network::{InvariantBreach, NetStats, Network, Protocol, RunSummary, Simulation, TraceEntry, TraceKey};
pub use scheduler::{
    from_seconds, seconds, EventId, EventKind, NodeId, ScheduleError, Scheduler, SimEvent, SimTime,
    MICROS_PER_SECOND,
};
