use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::series::MetricSeries;
use super::throughput::MetricsError;
use crate::chain::ChainStore;
use crate::primitives::Digest;
use crate::simnet::{seconds, SimTime};

/// Deepest confirmation depth tracked per block.
pub const MAX_TRACKED_DEPTH: u64 = 16;
/// Below this many depth-d observations a survival estimate is flagged.
pub const MIN_SURVIVAL_SAMPLES: u64 = 100;

/// What the observer node saw of a blockchain run.
#[derive(Clone, Debug, Default)]
pub struct ChainObservation {
    /// Every block produced anywhere in the network, genesis excluded.
    pub mined: BTreeSet<Digest>,
    /// Deepest confirmation count each block reached while on the
    /// observer's adopted chain, capped at [`MAX_TRACKED_DEPTH`].
    pub max_depth: BTreeMap<Digest, u64>,
    pub confirmation_latency: Vec<(SimTime, f64)>,
    pub reorg_depths: Vec<(SimTime, u64)>,
}

impl ChainObservation {
    /// Updates depth bookkeeping after the observer's head moved.
    pub fn on_head_change(&mut self, store: &ChainStore, now: SimTime, confirm_threshold: u64) {
        let head_height = store.head_height();
        let low = head_height.saturating_sub(MAX_TRACKED_DEPTH - 1).max(1);
        for height in low..=head_height {
            let id = store.main_at(height).expect("height on adopted chain");
            let depth = head_height - height + 1;
            let slot = self.max_depth.entry(id).or_insert(0);
            if depth > *slot {
                *slot = depth;
                if depth == confirm_threshold {
                    let ts = store.header(&id).expect("known").timestamp_us;
                    self.confirmation_latency.push((now, seconds(now - ts)));
                }
            }
        }
    }
}

/// Result of a chain run as seen by the observer at the end.
pub struct ChainRun<'a> {
    pub observer: &'a ChainStore,
    pub observation: &'a ChainObservation,
}

/// Result of a lattice run as seen by the observer at the end.
pub struct LatticeRun<'a> {
    pub observation: &'a LatticeObservation,
}

pub enum RunView<'a> {
    Chain(ChainRun<'a>),
    Lattice(LatticeRun<'a>),
}

impl<'a> RunView<'a> {
    fn chain(&self) -> Result<&ChainRun<'a>, MetricsError> {
        match self {
            RunView::Chain(c) => Ok(c),
            RunView::Lattice(_) => Err(MetricsError::WrongParadigm { expected: "blockchain" }),
        }
    }

    fn lattice(&self) -> Result<&LatticeRun<'a>, MetricsError> {
        match self {
            RunView::Lattice(l) => Ok(l),
            RunView::Chain(_) => Err(MetricsError::WrongParadigm { expected: "lattice" }),
        }
    }
}

/// Share of produced blocks that ended off the observer's adopted chain.
pub fn measure_orphan_rate(run: &RunView) -> Result<f64, MetricsError> {
    let chain = run.chain()?;
    let mined = chain.observation.mined.len();
    if mined == 0 {
        return Ok(0.0);
    }
    let orphaned = chain
        .observation
        .mined
        .iter()
        .filter(|id| !chain.observer.is_on_main(id))
        .count();
    Ok(orphaned as f64 / mined as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTally {
    pub depth: u64,
    pub reached: u64,
    pub survived: u64,
}

impl SurvivalTally {
    pub fn estimate(&self) -> Option<f64> {
        (self.reached > 0).then(|| self.survived as f64 / self.reached as f64)
    }

    pub fn standard_error(&self) -> f64 {
        match self.estimate() {
            Some(p) => (p * (1.0 - p) / self.reached as f64).sqrt(),
            None => f64::INFINITY,
        }
    }

    pub fn low_confidence(&self) -> bool {
        self.reached < MIN_SURVIVAL_SAMPLES
    }

    pub fn merge(&mut self, other: &SurvivalTally) {
        self.reached += other.reached;
        self.survived += other.survived;
    }
}

/// Of the blocks that reached `depth` confirmations at the observer, how many
/// remain on its final adopted chain.
pub fn measure_confirmation_survival(run: &RunView, depth: u64) -> Result<SurvivalTally, MetricsError> {
    let chain = run.chain()?;
    let mut tally = SurvivalTally {
        depth,
        ..Default::default()
    };
    for (id, reached) in &chain.observation.max_depth {
        if *reached >= depth {
            tally.reached += 1;
            if chain.observer.is_on_main(id) {
                tally.survived += 1;
            }
        }
    }
    Ok(tally)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub send: Digest,
    pub created_at: SimTime,
    /// When the observer applied the matching receive.
    pub settled_at: Option<SimTime>,
}

#[derive(Clone, Debug, Default)]
pub struct LatticeObservation {
    pub transfers: BTreeMap<Digest, Transfer>,
}

impl LatticeObservation {
    pub fn on_send_created(&mut self, send: Digest, at: SimTime) {
        self.transfers.entry(send).or_insert(Transfer {
            send,
            created_at: at,
            settled_at: None,
        });
    }

    pub fn on_receive_applied(&mut self, send: Digest, at: SimTime) {
        if let Some(t) = self.transfers.get_mut(&send) {
            t.settled_at.get_or_insert(at);
        }
    }

    pub fn on_receive_rolled_back(&mut self, send: Digest) {
        if let Some(t) = self.transfers.get_mut(&send) {
            t.settled_at = None;
        }
    }

    pub fn settled_count(&self) -> usize {
        self.transfers.values().filter(|t| t.settled_at.is_some()).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SettlementLatency {
    /// Sampled at settlement time, ordered by it.
    pub series: MetricSeries,
    pub unsettled: Vec<Digest>,
}

/// Per-transfer time from send creation to receive adoption at the observer.
pub fn measure_settlement_latency(run: &RunView) -> Result<SettlementLatency, MetricsError> {
    let lattice = run.lattice()?;
    let mut settled: Vec<(SimTime, f64)> = Vec::new();
    let mut unsettled = Vec::new();
    for t in lattice.observation.transfers.values() {
        match t.settled_at {
            Some(at) => settled.push((at, seconds(at - t.created_at))),
            None => unsettled.push(t.send),
        }
    }
    settled.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut series = MetricSeries::new("settlement_latency", "s");
    for (at, latency) in settled {
        series.push(seconds(at), latency);
    }
    Ok(SettlementLatency { series, unsettled })
}
