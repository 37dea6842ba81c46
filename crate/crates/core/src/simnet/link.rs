use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scheduler::{NodeId, SimTime};
use crate::rng::SimRng;

/// A window during which messages between the two sides are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub start_us: SimTime,
    pub end_us: SimTime,
    pub side_a: BTreeSet<NodeId>,
    pub side_b: BTreeSet<NodeId>,
}

impl Partition {
    pub fn active(&self, at: SimTime) -> bool {
        self.start_us <= at && at < self.end_us
    }

    pub fn separates(&self, a: NodeId, b: NodeId) -> bool {
        (self.side_a.contains(&a) && self.side_b.contains(&b))
            || (self.side_b.contains(&a) && self.side_a.contains(&b))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkModel {
    pub base_latency_us: SimTime,
    /// Half-width of the uniform jitter around the base latency.
    pub jitter_us: SimTime,
    pub drop_prob: f64,
    pub partitions: Vec<Partition>,
}

impl LinkModel {
    pub fn fixed(latency_us: SimTime) -> Self {
        LinkModel {
            base_latency_us: latency_us,
            ..Default::default()
        }
    }

    pub fn sample_latency(&self, rng: &mut SimRng) -> SimTime {
        if self.jitter_us == 0 {
            return self.base_latency_us;
        }
        let offset = rng.random_range(0..=2 * self.jitter_us) as i128 - self.jitter_us as i128;
        (self.base_latency_us as i128 + offset).max(0) as SimTime
    }

    pub fn partitioned(&self, at: SimTime, from: NodeId, to: NodeId) -> bool {
        self.partitions.iter().any(|p| p.active(at) && p.separates(from, to))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    #[default]
    FullMesh,
    /// Undirected edges.
    Edges(Vec<(NodeId, NodeId)>),
}

impl Topology {
    pub fn adjacency(&self, nodes: usize) -> Vec<Vec<NodeId>> {
        match self {
            Topology::FullMesh => (0..nodes)
                .map(|n| (0..nodes).filter(|&p| p != n).collect())
                .collect(),
            Topology::Edges(edges) => {
                let mut sets = vec![BTreeSet::new(); nodes];
                for &(a, b) in edges {
                    if a < nodes && b < nodes && a != b {
                        sets[a].insert(b);
                        sets[b].insert(a);
                    }
                }
                sets.into_iter().map(|s| s.into_iter().collect()).collect()
            }
        }
    }
}
