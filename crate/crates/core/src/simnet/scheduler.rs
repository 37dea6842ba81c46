use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Simulation clock in microseconds.
pub type SimTime = u64;
pub type NodeId = usize;
pub type EventId = u64;

pub const MICROS_PER_SECOND: f64 = 1_000_000.0;

pub fn seconds(at: SimTime) -> f64 {
    at as f64 / MICROS_PER_SECOND
}

pub fn from_seconds(s: f64) -> SimTime {
    (s * MICROS_PER_SECOND).round().max(0.0) as SimTime
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("cannot schedule at {at}us: clock already at {now}us")]
    InPast { at: SimTime, now: SimTime },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind<M> {
    Deliver { from: NodeId, sent_at: SimTime, message: M },
    Timer { token: u64 },
    Command(M),
}

impl<M> EventKind<M> {
    pub fn discriminant(&self) -> u8 {
        match self {
            EventKind::Deliver { .. } => 0,
            EventKind::Timer { .. } => 1,
            EventKind::Command(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent<M> {
    pub at: SimTime,
    pub sequence: EventId,
    pub destination: NodeId,
    pub kind: EventKind<M>,
}

struct Queued<M>(SimEvent<M>);

impl<M> PartialEq for Queued<M> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<M> Eq for Queued<M> {}
impl<M> PartialOrd for Queued<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<M> Ord for Queued<M> {
    // Reversed so the max-heap pops the earliest (at, sequence).
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.at, other.0.sequence).cmp(&(self.0.at, self.0.sequence))
    }
}

/// Global event queue ordered by time, then by insertion.
pub struct Scheduler<M> {
    now: SimTime,
    next_sequence: EventId,
    queue: BinaryHeap<Queued<M>>,
}

impl<M> Default for Scheduler<M> {
    fn default() -> Self {
        Scheduler {
            now: 0,
            next_sequence: 0,
            queue: BinaryHeap::new(),
        }
    }
}

impl<M> Scheduler<M> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn schedule(&mut self, at: SimTime, destination: NodeId, kind: EventKind<M>) -> Result<EventId, ScheduleError> {
        if at < self.now {
            return Err(ScheduleError::InPast { at, now: self.now });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Queued(SimEvent {
            at,
            sequence,
            destination,
            kind,
        }));
        Ok(sequence)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|q| q.0.at)
    }

    /// Removes the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<SimEvent<M>> {
        let event = self.queue.pop()?.0;
        self.now = event.at;
        Some(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_instant_runs_in_insertion_order() {
        let mut s: Scheduler<()> = Scheduler::new();
        s.schedule(5, 1, EventKind::Timer { token: 0 }).unwrap();
        s.schedule(5, 2, EventKind::Timer { token: 1 }).unwrap();
        assert_eq!(s.pop().unwrap().destination, 1);
        assert_eq!(s.pop().unwrap().destination, 2);
    }

    #[test]
    fn past_is_rejected_and_now_is_allowed() {
        let mut s: Scheduler<()> = Scheduler::new();
        s.schedule(10, 0, EventKind::Timer { token: 0 }).unwrap();
        s.pop();
        assert_eq!(
            s.schedule(9, 0, EventKind::Timer { token: 0 }),
            Err(ScheduleError::InPast { at: 9, now: 10 })
        );
        s.schedule(10, 0, EventKind::Timer { token: 7 }).unwrap();
        s.schedule(11, 0, EventKind::Timer { token: 8 }).unwrap();
        let e = s.pop().unwrap();
        assert_eq!((e.at, e.kind), (10, EventKind::Timer { token: 7 }));
    }
}
