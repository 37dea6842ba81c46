use serde::{Deserialize, Serialize};

/// Canonical-encoding byte counts of a node's retained ledger data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerBytes {
    pub headers: u64,
    pub bodies: u64,
    pub deltas: u64,
    pub state: u64,
    pub lattice_blocks: u64,
    pub pending: u64,
}

impl LedgerBytes {
    pub fn total(&self) -> u64 {
        self.headers + self.bodies + self.deltas + self.state + self.lattice_blocks + self.pending
    }

    pub fn categories(&self) -> [(&'static str, u64); 6] {
        [
            ("headers", self.headers),
            ("bodies", self.bodies),
            ("deltas", self.deltas),
            ("state", self.state),
            ("lattice_blocks", self.lattice_blocks),
            ("pending", self.pending),
        ]
    }
}
