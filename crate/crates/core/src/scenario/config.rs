use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{DEFAULT_CONFIRM_THRESHOLD, DEFAULT_PIVOT_OFFSET};
use crate::election::MAX_GRIND_BITS;
use crate::lattice::{NodeTier, DEFAULT_GAP_BUFFER, DEFAULT_QUORUM};
use crate::metrics::Paradigm;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {0} (and no bundled preset has that name)")]
    NotFound(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid override `{0}`: expected KEY=VALUE")]
    BadOverride(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub net: NetSection,
    pub pow: PowSection,
    pub pos: PosSection,
    pub chain: ChainSection,
    pub lattice: LatticeSection,
    pub sweep: SweepSection,
    pub debug: DebugSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub name: String,
    pub paradigm: Paradigm,
    pub nodes: usize,
    pub horizon_s: f64,
    /// Node whose view all metrics are read from.
    pub observer: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub start_s: f64,
    pub end_s: f64,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetSection {
    pub base_latency_ms: f64,
    pub jitter_ms: f64,
    pub drop_prob: f64,
    pub partitions: Vec<PartitionConfig>,
    /// `full-mesh` or `edges`.
    pub topology: String,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowMode {
    Lottery,
    Grind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowSection {
    pub mode: PowMode,
    /// Starting difficulty in grind mode.
    pub difficulty_bits: u32,
    pub target_interval_s: f64,
    pub retarget_window: u64,
    /// Relative hash power per node; empty means equal shares.
    pub hashpower: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PosSection {
    pub slot_interval_s: f64,
    /// Deposit per node; empty means equal deposits.
    pub stakes: Vec<u64>,
    /// Validators that seal an overspending block when selected.
    pub faulty: Vec<usize>,
    pub fault_prob: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsensusKind {
    Pow,
    Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadKind {
    /// Every block can be filled to capacity.
    Saturated,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub consensus: ConsensusKind,
    pub capacity_units: u64,
    pub tx_weight: u64,
    pub block_reward: u64,
    pub confirm_threshold: u64,
    /// 0 disables pruning on the observer.
    pub prune_keep_recent: u64,
    pub fastsync_pivot_offset: u64,
    pub load: LoadKind,
    pub users: u64,
    pub user_balance: u64,
    /// Producers stop once a block of this height exists; 0 means never.
    pub stop_at_height: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    pub quorum_fraction: f64,
    /// Absent disables cementing.
    pub cement_delay_s: Option<f64>,
    pub gap_buffer: usize,
    pub spam_difficulty_bits: u32,
    pub accounts: u64,
    pub account_balance: u64,
    /// The first `representatives` nodes each host one representative.
    pub representatives: usize,
    /// Balance of representative `r` is `rep_balance_unit * 2^r`.
    pub rep_balance_unit: u64,
    pub send_rate_per_s: f64,
    /// Per-node tier; empty means all historical.
    pub tiers: Vec<NodeTier>,
    pub prune_interval_s: f64,
    pub offline_accounts: Vec<u64>,
    /// Double-spend conflicts injected by an attacker on the last node.
    pub conflicts: u64,
    pub attack_start_s: f64,
    pub attack_spacing_s: f64,
}

/// Runs the scenario once per value of one dotted key.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DebugSection {
    /// Credits unbacked funds on the observer at this time.
    pub conservation_breach_at_s: Option<f64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            name: "unnamed".into(),
            paradigm: Paradigm::Blockchain,
            nodes: 4,
            horizon_s: 3600.0,
            observer: 0,
        }
    }
}

impl Default for NetSection {
    fn default() -> Self {
        NetSection {
            base_latency_ms: 100.0,
            jitter_ms: 0.0,
            drop_prob: 0.0,
            partitions: Vec::new(),
            topology: "full-mesh".into(),
            edges: Vec::new(),
        }
    }
}

impl Default for PowSection {
    fn default() -> Self {
        PowSection {
            mode: PowMode::Lottery,
            difficulty_bits: 8,
            target_interval_s: 600.0,
            retarget_window: 16,
            hashpower: Vec::new(),
        }
    }
}

impl Default for PosSection {
    fn default() -> Self {
        PosSection {
            slot_interval_s: 12.0,
            stakes: Vec::new(),
            faulty: Vec::new(),
            fault_prob: 0.0,
        }
    }
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            consensus: ConsensusKind::Pow,
            capacity_units: 1_000_000,
            tx_weight: 400,
            block_reward: 50,
            confirm_threshold: DEFAULT_CONFIRM_THRESHOLD,
            prune_keep_recent: 0,
            fastsync_pivot_offset: DEFAULT_PIVOT_OFFSET,
            load: LoadKind::None,
            users: 100,
            user_balance: 1_000_000_000_000,
            stop_at_height: 0,
        }
    }
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection {
            quorum_fraction: DEFAULT_QUORUM,
            cement_delay_s: None,
            gap_buffer: DEFAULT_GAP_BUFFER,
            spam_difficulty_bits: 0,
            accounts: 10,
            account_balance: 1_000_000,
            representatives: 2,
            rep_balance_unit: 1_000_000_000,
            send_rate_per_s: 0.2,
            tiers: Vec::new(),
            prune_interval_s: 30.0,
            offline_accounts: Vec::new(),
            conflicts: 0,
            attack_start_s: 5.0,
            attack_spacing_s: 10.0,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: ScenarioSection::default(),
            net: NetSection::default(),
            pow: PowSection::default(),
            pos: PosSection::default(),
            chain: ChainSection::default(),
            lattice: LatticeSection::default(),
            sweep: SweepSection::default(),
            debug: DebugSection::default(),
        }
    }
}

pub const PRESETS: [(&str, &str); 7] = [
    ("bitcoin-baseline", include_str!("../../scenarios/bitcoin-baseline.toml")),
    ("ethereum-baseline", include_str!("../../scenarios/ethereum-baseline.toml")),
    ("pos-baseline", include_str!("../../scenarios/pos-baseline.toml")),
    ("nano-baseline", include_str!("../../scenarios/nano-baseline.toml")),
    ("nano-scaling", include_str!("../../scenarios/nano-scaling.toml")),
    ("fork-stress", include_str!("../../scenarios/fork-stress.toml")),
    ("partition-stress", include_str!("../../scenarios/partition-stress.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Parses `KEY=VALUE`; the value is read as a TOML literal, or as a bare
/// string when it is not one.
pub fn parse_override(text: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(text.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::BadOverride(text.to_string()));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

/// Sets a dotted key inside a TOML table, creating intermediate tables.
pub fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut cursor = table;
    for part in parts {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| invalid(key, format!("`{part}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_table(parse_table(text)?)
    }

    pub fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file, or a bundled preset when `source` names one and
    /// no such file exists, then applies `KEY=VALUE` overrides.
    pub fn load(source: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table = parse_table(&read_source(source)?)?;
        for text in overrides {
            let (key, value) = parse_override(text)?;
            set_dotted(&mut table, &key, value)?;
        }
        Self::from_table(table)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let text = preset_text(name).ok_or_else(|| ConfigError::NotFound(name.to_string()))?;
        Self::from_toml_str(text)
    }

    /// Copy with overrides applied.
    pub fn with_overrides(&self, overrides: &[(&str, toml::Value)]) -> Result<Self, ConfigError> {
        let mut table = toml::Table::try_from(self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for (key, value) in overrides {
            set_dotted(&mut table, key, value.clone())?;
        }
        Self::from_table(table)
    }

    /// One config per sweep value; the config itself when no sweep is set.
    pub fn expand_sweep(&self) -> Result<Vec<ScenarioConfig>, ConfigError> {
        if self.sweep.key.is_empty() {
            return Ok(vec![self.clone()]);
        }
        let mut base = self.clone();
        base.sweep = SweepSection::default();
        let leaf = self.sweep.key.rsplit('.').next().unwrap_or_default().to_string();
        self.sweep
            .values
            .iter()
            .map(|value| {
                let mut variant = base.with_overrides(&[(self.sweep.key.as_str(), value.clone())])?;
                variant.scenario.name = format!("{}@{}={}", base.scenario.name, leaf, value);
                Ok(variant)
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn hashpower(&self) -> Vec<f64> {
        if self.pow.hashpower.is_empty() {
            vec![1.0; self.scenario.nodes]
        } else {
            self.pow.hashpower.clone()
        }
    }

    pub fn stakes(&self) -> Vec<u64> {
        if self.pos.stakes.is_empty() {
            vec![32_000_000_000; self.scenario.nodes]
        } else {
            self.pos.stakes.clone()
        }
    }

    pub fn tiers(&self) -> Vec<NodeTier> {
        if self.lattice.tiers.is_empty() {
            vec![NodeTier::Historical; self.scenario.nodes]
        } else {
            self.lattice.tiers.clone()
        }
    }

    /// Mean seconds between blocks the producer rule aims for.
    pub fn block_interval_s(&self) -> f64 {
        match self.chain.consensus {
            ConsensusKind::Pow => self.pow.target_interval_s,
            ConsensusKind::Pos => self.pos.slot_interval_s,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        let nodes = s.nodes;
        if s.name.is_empty() {
            return Err(invalid("scenario.name", "must not be empty"));
        }
        if nodes == 0 {
            return Err(invalid("scenario.nodes", "need at least one node"));
        }
        if !(s.horizon_s >= 0.0) || !s.horizon_s.is_finite() {
            return Err(invalid("scenario.horizon_s", "must be a finite non-negative number"));
        }
        if s.observer >= nodes {
            return Err(invalid("scenario.observer", "must name an existing node"));
        }
        let n = &self.net;
        if !(n.base_latency_ms >= 0.0) {
            return Err(invalid("net.base_latency_ms", "must be non-negative"));
        }
        if !(n.jitter_ms >= 0.0) {
            return Err(invalid("net.jitter_ms", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&n.drop_prob) {
            return Err(invalid("net.drop_prob", "must be within [0, 1]"));
        }
        for p in &n.partitions {
            if !(p.start_s <= p.end_s) || p.a.iter().chain(&p.b).any(|&x| x >= nodes) {
                return Err(invalid("net.partitions", "needs start_s <= end_s and existing node ids"));
            }
        }
        match n.topology.as_str() {
            "full-mesh" => {}
            "edges" => {
                if n.edges.iter().flatten().any(|&x| x >= nodes) {
                    return Err(invalid("net.edges", "edge names a node that does not exist"));
                }
            }
            _ => return Err(invalid("net.topology", "expected `full-mesh` or `edges`")),
        }
        match s.paradigm {
            Paradigm::Blockchain => self.validate_chain(),
            Paradigm::Lattice => self.validate_lattice(),
        }
    }

    fn validate_chain(&self) -> Result<(), ConfigError> {
        let nodes = self.scenario.nodes;
        let p = &self.pow;
        if !(p.target_interval_s > 0.0) {
            return Err(invalid("pow.target_interval_s", "must be positive"));
        }
        if p.retarget_window == 0 {
            return Err(invalid("pow.retarget_window", "must be at least 1"));
        }
        if p.mode == PowMode::Grind && p.difficulty_bits > MAX_GRIND_BITS {
            return Err(invalid("pow.difficulty_bits", format!("grind mode supports at most {MAX_GRIND_BITS} bits")));
        }
        if !p.hashpower.is_empty() && p.hashpower.len() != nodes {
            return Err(invalid("pow.hashpower", "needs one entry per node"));
        }
        if p.hashpower.iter().any(|h| !(*h >= 0.0)) || self.hashpower().iter().sum::<f64>() <= 0.0 {
            return Err(invalid("pow.hashpower", "entries must be non-negative with a positive total"));
        }
        let q = &self.pos;
        if !(q.slot_interval_s > 0.0) {
            return Err(invalid("pos.slot_interval_s", "must be positive"));
        }
        if !q.stakes.is_empty() && q.stakes.len() != nodes {
            return Err(invalid("pos.stakes", "needs one entry per node"));
        }
        if self.chain.consensus == ConsensusKind::Pos && self.stakes().iter().sum::<u64>() == 0 {
            return Err(invalid("pos.stakes", "total stake must be positive"));
        }
        if q.faulty.iter().any(|&f| f >= nodes) {
            return Err(invalid("pos.faulty", "names a node that does not exist"));
        }
        if !(0.0..=1.0).contains(&q.fault_prob) {
            return Err(invalid("pos.fault_prob", "must be within [0, 1]"));
        }
        let c = &self.chain;
        if c.capacity_units == 0 {
            return Err(invalid("chain.capacity_units", "must be positive"));
        }
        if c.tx_weight == 0 || c.tx_weight > c.capacity_units {
            return Err(invalid("chain.tx_weight", "must be positive and at most chain.capacity_units"));
        }
        if c.confirm_threshold == 0 {
            return Err(invalid("chain.confirm_threshold", "must be at least 1"));
        }
        if c.load == LoadKind::Saturated && c.users == 0 {
            return Err(invalid("chain.users", "saturated load needs at least one user"));
        }
        if c.prune_keep_recent != 0 && c.prune_keep_recent < crate::chain::DEFAULT_PRUNE_SAFETY_WINDOW {
            return Err(invalid(
                "chain.prune_keep_recent",
                format!("must be 0 or at least {}", crate::chain::DEFAULT_PRUNE_SAFETY_WINDOW),
            ));
        }
        Ok(())
    }

    fn validate_lattice(&self) -> Result<(), ConfigError> {
        let nodes = self.scenario.nodes;
        let l = &self.lattice;
        if !(l.quorum_fraction > 0.0 && l.quorum_fraction < 1.0) {
            return Err(invalid("lattice.quorum_fraction", "must be within (0, 1)"));
        }
        if let Some(d) = l.cement_delay_s {
            if !(d >= 0.0) {
                return Err(invalid("lattice.cement_delay_s", "must be non-negative"));
            }
        }
        if l.gap_buffer == 0 {
            return Err(invalid("lattice.gap_buffer", "must be positive"));
        }
        if l.spam_difficulty_bits > MAX_GRIND_BITS {
            return Err(invalid("lattice.spam_difficulty_bits", format!("at most {MAX_GRIND_BITS}")));
        }
        if l.representatives == 0 || l.representatives > nodes {
            return Err(invalid("lattice.representatives", "must be between 1 and scenario.nodes"));
        }
        if l.representatives > 40 {
            return Err(invalid("lattice.representatives", "at most 40"));
        }
        if !(l.send_rate_per_s >= 0.0) {
            return Err(invalid("lattice.send_rate_per_s", "must be non-negative"));
        }
        if !l.tiers.is_empty() && l.tiers.len() != nodes {
            return Err(invalid("lattice.tiers", "needs one entry per node"));
        }
        let tiers = self.tiers();
        if tiers[self.scenario.observer] == NodeTier::Light {
            return Err(invalid("lattice.tiers", "the observer cannot be a light node"));
        }
        if tiers.iter().take(l.representatives).any(|t| *t == NodeTier::Light) {
            return Err(invalid("lattice.tiers", "representative nodes cannot be light"));
        }
        if !(l.prune_interval_s > 0.0) {
            return Err(invalid("lattice.prune_interval_s", "must be positive"));
        }
        if l.accounts < 2 {
            return Err(invalid("lattice.accounts", "need at least two accounts"));
        }
        if l.conflicts > 0 {
            if nodes < 2 || nodes - 1 < l.representatives {
                return Err(invalid("lattice.conflicts", "the attacker needs its own node besides the representatives"));
            }
            if !(l.attack_spacing_s > 0.0) || !(l.attack_start_s >= 0.0) {
                return Err(invalid("lattice.attack_spacing_s", "must be positive"));
            }
        }
        Ok(())
    }
}

fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    toml::from_str(text).map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))
}

fn read_source(source: &str) -> Result<String, ConfigError> {
    let path = Path::new(source);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: source.to_string(),
            source: e,
        });
    }
    preset_text(source)
        .map(str::to_string)
        .ok_or_else(|| ConfigError::NotFound(source.to_string()))
}
