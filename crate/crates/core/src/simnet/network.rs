use rand::Rng;
use thiserror::Error;

use super::link::{LinkModel, Topology};
use super::scheduler::{EventId, EventKind, NodeId, ScheduleError, Scheduler, SimEvent, SimTime};
use crate::primitives::{digest, Digest, RollingDigest};
use crate::rng::{derive_rng, SimRng};

/// Digest a message contributes to the run trace.
pub trait TraceKey {
    fn trace_key(&self) -> Digest;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NetStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub partitioned: u64,
}

/// Scheduler plus links: everything a protocol handler may touch.
pub struct Network<M> {
    scheduler: Scheduler<M>,
    link: LinkModel,
    adjacency: Vec<Vec<NodeId>>,
    rng: SimRng,
    stats: NetStats,
}

impl<M: Clone> Network<M> {
    pub fn new(nodes: usize, link: LinkModel, topology: &Topology, seed: u64) -> Self {
        Network {
            scheduler: Scheduler::new(),
            link,
            adjacency: topology.adjacency(nodes),
            rng: derive_rng(seed, "net/links", 0),
            stats: NetStats::default(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.scheduler.now()
    }
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }
    pub fn peers(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }
    pub fn link(&self) -> &LinkModel {
        &self.link
    }
    pub fn stats(&self) -> NetStats {
        self.stats
    }
    pub fn pending_events(&self) -> usize {
        self.scheduler.len()
    }

    /// Sends one message over a sampled link; `None` if it was lost.
    pub fn send(&mut self, from: NodeId, to: NodeId, message: M) -> Option<EventId> {
        let now = self.now();
        self.stats.sent += 1;
        if self.link.partitioned(now, from, to) {
            self.stats.partitioned += 1;
            return None;
        }
        if self.link.drop_prob > 0.0 && self.rng.random::<f64>() < self.link.drop_prob {
            self.stats.dropped += 1;
            return None;
        }
        let latency = self.link.sample_latency(&mut self.rng);
        self.stats.delivered += 1;
        let kind = EventKind::Deliver {
            from,
            sent_at: now,
            message,
        };
        Some(self.scheduler.schedule(now + latency, to, kind).expect("latency is non-negative"))
    }

    /// Sends to every connected peer; returns the number of deliveries scheduled.
    pub fn broadcast(&mut self, from: NodeId, message: &M) -> usize {
        let peers = self.adjacency[from].clone();
        peers
            .into_iter()
            .filter(|&to| self.send(from, to, message.clone()).is_some())
            .count()
    }

    pub fn set_timer(&mut self, node: NodeId, at: SimTime, token: u64) -> Result<EventId, ScheduleError> {
        self.scheduler.schedule(at, node, EventKind::Timer { token })
    }

    pub fn command(&mut self, node: NodeId, at: SimTime, message: M) -> Result<EventId, ScheduleError> {
        self.scheduler.schedule(at, node, EventKind::Command(message))
    }

    fn pop_until(&mut self, horizon: SimTime) -> Option<SimEvent<M>> {
        match self.scheduler.peek_time() {
            Some(at) if at <= horizon => self.scheduler.pop(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invariant breached at {at}us on node {node}: {invariant}: {detail}")]
pub struct InvariantBreach {
    pub invariant: String,
    pub node: NodeId,
    pub at: SimTime,
    pub detail: String,
}

/// Node behaviour driven by the event loop.
pub trait Protocol {
    type Message: Clone + TraceKey;

    fn on_event(&mut self, node: NodeId, event: EventKind<Self::Message>, net: &mut Network<Self::Message>);

    /// Checked after every event handled by `node`.
    fn check_invariants(&self, node: NodeId, now: SimTime) -> Result<(), InvariantBreach>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub at: SimTime,
    pub sequence: EventId,
    pub destination: NodeId,
    pub kind: u8,
    pub sent_at: SimTime,
    pub key: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub trace_digest: Digest,
    pub events: u64,
    pub end_time: SimTime,
    pub stats: NetStats,
}

pub struct Simulation<P: Protocol> {
    pub protocol: P,
    pub net: Network<P::Message>,
    trace: RollingDigest,
    events: u64,
    record: Option<Vec<TraceEntry>>,
}

impl<P: Protocol> Simulation<P> {
    pub fn new(protocol: P, net: Network<P::Message>) -> Self {
        Simulation {
            protocol,
            net,
            trace: RollingDigest::new(),
            events: 0,
            record: None,
        }
    }

    /// Keeps every trace entry in memory, not only the rolling digest.
    pub fn record_trace(mut self) -> Self {
        self.record = Some(Vec::new());
        self
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.record.as_deref().unwrap_or(&[])
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            trace_digest: self.trace.finish(),
            events: self.events,
            end_time: self.net.now(),
            stats: self.net.stats(),
        }
    }

    /// Runs every event at or before `horizon`.
    pub fn run(&mut self, horizon: SimTime) -> Result<RunSummary, InvariantBreach> {
        while let Some(event) = self.net.pop_until(horizon) {
            let (sent_at, key) = match &event.kind {
                EventKind::Deliver { sent_at, message, .. } => (*sent_at, message.trace_key()),
                EventKind::Timer { token } => (event.at, digest(&token.to_be_bytes())),
                EventKind::Command(message) => (event.at, message.trace_key()),
            };
            let entry = TraceEntry {
                at: event.at,
                sequence: event.sequence,
                destination: event.destination,
                kind: event.kind.discriminant(),
                sent_at,
                key,
            };
            self.trace.update(&entry.at.to_be_bytes());
            self.trace.update(&entry.sequence.to_be_bytes());
            self.trace.update(&(entry.destination as u64).to_be_bytes());
            self.trace.update(&[entry.kind]);
            self.trace.update(entry.key.as_bytes());
            if let Some(record) = self.record.as_mut() {
                record.push(entry);
            }
            self.events += 1;
            let node = event.destination;
            self.protocol.on_event(node, event.kind, &mut self.net);
            self.protocol.check_invariants(node, event.at)?;
        }
        Ok(self.summary())
    }
}
