//! Scenario configuration, bundled presets, and the drivers that run a
//! configured network of nodes and turn the outcome into a report.

mod chain_world;
mod config;
mod lattice_world;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use chain_world::{ChainMsg, ChainWorld};
pub use config::{
    parse_override, preset_names, preset_text, set_dotted, ChainSection, ConfigError, ConsensusKind,
    DebugSection, LatticeSection, LoadKind, NetSection, PartitionConfig, PosSection, PowMode, PowSection,
    ScenarioConfig, ScenarioSection, SweepSection,
};
pub use lattice_world::{LatticeMsg, LatticeWorld, ATTACKER_BASE, REP_BASE};

use crate::metrics::{InvariantStatus, Paradigm, ScenarioReport};
use crate::primitives::Digest;
use crate::simnet::{
    from_seconds, InvariantBreach, LinkModel, Network, Partition, Protocol, Simulation, Topology,
};

/// First account id of the simulated users; node identities sit below it.
pub const USER_BASE: u64 = 1_000_000;

const TOKEN_KIND_SHIFT: u32 = 56;

/// Packs a timer kind into the top byte and a payload into the rest.
pub(crate) fn timer_token(kind: u8, value: u64) -> u64 {
    debug_assert!(value < 1 << TOKEN_KIND_SHIFT);
    (kind as u64) << TOKEN_KIND_SHIFT | value
}

pub(crate) fn split_token(token: u64) -> (u8, u64) {
    ((token >> TOKEN_KIND_SHIFT) as u8, token & ((1 << TOKEN_KIND_SHIFT) - 1))
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write reports to {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub fn build_network<M: Clone>(cfg: &ScenarioConfig, seed: u64) -> Network<M> {
    let n = &cfg.net;
    let ms = |v: f64| from_seconds(v / 1000.0);
    let link = LinkModel {
        base_latency_us: ms(n.base_latency_ms),
        jitter_us: ms(n.jitter_ms),
        drop_prob: n.drop_prob,
        partitions: n
            .partitions
            .iter()
            .map(|p| Partition {
                start_us: from_seconds(p.start_s),
                end_us: from_seconds(p.end_s),
                side_a: p.a.iter().copied().collect(),
                side_b: p.b.iter().copied().collect(),
            })
            .collect(),
    };
    let topology = match n.topology.as_str() {
        "edges" => Topology::Edges(n.edges.iter().map(|[a, b]| (*a, *b)).collect()),
        _ => Topology::FullMesh,
    };
    Network::new(cfg.scenario.nodes, link, &topology, seed)
}

trait World: Protocol + Sized {
    fn start(&mut self, net: &mut Network<Self::Message>);
    fn report(&self, scenario: &str, trace_digest: Digest, events: u64) -> ScenarioReport;
    fn final_checks(&self) -> Vec<(String, bool)> {
        Vec::new()
    }
}

impl World for ChainWorld {
    fn start(&mut self, net: &mut Network<ChainMsg>) {
        ChainWorld::start(self, net)
    }
    fn report(&self, scenario: &str, trace_digest: Digest, events: u64) -> ScenarioReport {
        ChainWorld::report(self, scenario, trace_digest, events)
    }
}

impl World for LatticeWorld {
    fn start(&mut self, net: &mut Network<LatticeMsg>) {
        LatticeWorld::start(self, net)
    }
    fn report(&self, scenario: &str, trace_digest: Digest, events: u64) -> ScenarioReport {
        LatticeWorld::report(self, scenario, trace_digest, events)
    }
    fn final_checks(&self) -> Vec<(String, bool)> {
        LatticeWorld::final_checks(self)
    }
}

fn drive<W: World>(cfg: &ScenarioConfig, seed: u64, mut world: W) -> ScenarioReport {
    let mut net = build_network(cfg, seed);
    world.start(&mut net);
    let mut sim = Simulation::new(world, net);
    let outcome = sim.run(from_seconds(cfg.scenario.horizon_s));
    let summary = sim.summary();
    let mut report = sim
        .protocol
        .report(&cfg.scenario.name, summary.trace_digest, summary.events);
    report.set_scalar("sim_end_time", "s", crate::simnet::seconds(summary.end_time));
    report.set_scalar("messages_sent", "msgs", summary.stats.sent as f64);
    report.set_scalar("messages_dropped", "msgs", (summary.stats.dropped + summary.stats.partitioned) as f64);
    match outcome {
        Ok(_) => {
            report.invariants.push(InvariantStatus {
                name: "balance conservation".into(),
                held: true,
                detail: None,
            });
            for (name, held) in sim.protocol.final_checks() {
                report.invariants.push(InvariantStatus {
                    name,
                    held,
                    detail: None,
                });
            }
        }
        Err(InvariantBreach {
            invariant,
            node,
            at,
            detail,
        }) => report.invariants.push(InvariantStatus {
            name: invariant,
            held: false,
            detail: Some(format!("node {node} at {at}us: {detail}")),
        }),
    }
    report
}

/// Runs one configuration with one seed. An invariant breach aborts the run
/// and is recorded in the report as a failed invariant.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<ScenarioReport, ScenarioError> {
    cfg.validate()?;
    Ok(match cfg.scenario.paradigm {
        Paradigm::Blockchain => drive(cfg, seed, ChainWorld::new(cfg, seed)),
        Paradigm::Lattice => drive(cfg, seed, LatticeWorld::new(cfg, seed)),
    })
}

/// Runs every sweep variant with every seed, writing one JSON and one CSV
/// file per run into `out_dir` when given.
pub fn run_scenario_suite(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    out_dir: Option<&Path>,
) -> Result<Vec<ScenarioReport>, ScenarioError> {
    let variants = cfg.expand_sweep()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| ScenarioError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let mut reports = Vec::with_capacity(variants.len() * seeds.len());
    for variant in &variants {
        for &seed in seeds {
            let report = run_scenario(variant, seed)?;
            if let Some(dir) = out_dir {
                report.write_to(dir).map_err(|source| ScenarioError::Output {
                    path: dir.to_path_buf(),
                    source,
                })?;
            }
            reports.push(report);
        }
    }
    Ok(reports)
}
