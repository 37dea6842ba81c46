use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::config::{ConsensusKind, LoadKind, PowMode, ScenarioConfig};
use super::{split_token, timer_token, USER_BASE};
use crate::chain::{
    assemble_from, Block, BlockTemplate, ChainParams, ChainStore, ChainTransaction, Consensus,
    PruneReport, Verdict,
};
use crate::election::{lottery_next_leader, mine, pos_select, DifficultySchedule, StakeRegistry};
use crate::metrics::{
    measure_confirmation_survival, measure_orphan_rate, tps_cap, ChainObservation, ChainRun,
    MetricSeries, Paradigm, RunView, ScenarioReport,
};
use crate::primitives::{digest, digest_parts, merkle_root, AccountId, Digest, Identity, Keyring};
use crate::rng::{derive_rng, SimRng};
use crate::simnet::{
    from_seconds, seconds, EventKind, InvariantBreach, Network, NodeId, Protocol, SimTime, TraceKey,
};

const LOTTERY: u8 = 1;
const GRIND: u8 = 2;
const SLOT: u8 = 3;

/// Deepest survival depth reported.
pub const SURVIVAL_DEPTHS: u64 = 8;
/// Observer prunes every this many heights when pruning is on.
const PRUNE_EVERY: u64 = 32;

#[derive(Clone, Debug)]
pub enum ChainMsg {
    Block(Arc<Block>),
    /// Asks a peer for a block by id.
    Request(Digest),
    InjectBreach,
}

impl TraceKey for ChainMsg {
    fn trace_key(&self) -> Digest {
        match self {
            ChainMsg::Block(b) => b.id(),
            ChainMsg::Request(id) => digest_parts(&[b"request", id.as_bytes()]),
            ChainMsg::InjectBreach => digest(b"inject-breach"),
        }
    }
}

/// Deterministic saturated transaction stream shared by all nodes: entry `i`
/// is sent by user `i % users` with sequence `i / users`.
struct TxFeed {
    users: Vec<Identity>,
    weight: u64,
    /// Feed index of `window[0]`.
    base: u64,
    window: VecDeque<ChainTransaction>,
}

impl TxFeed {
    fn entry(&self, index: u64) -> ChainTransaction {
        let count = self.users.len() as u64;
        let sender = &self.users[(index % count) as usize];
        let recipient = AccountId(USER_BASE + (index + 1) % count);
        ChainTransaction::signed(sender, recipient, 1, index / count, self.weight)
    }

    /// Entries `start..end`, signing any not produced yet. Entries more than
    /// `keep` below `start` are discarded.
    fn range(&mut self, start: u64, end: u64, keep: u64) -> impl Iterator<Item = &ChainTransaction> {
        let floor = start.saturating_sub(keep);
        while self.base < floor && !self.window.is_empty() {
            self.window.pop_front();
            self.base += 1;
        }
        if self.window.is_empty() {
            self.base = self.base.max(floor);
        }
        // A producer on a stale fork can ask for entries already discarded.
        while self.base > start {
            self.base -= 1;
            let earlier = self.entry(self.base);
            self.window.push_front(earlier);
        }
        while self.base + (self.window.len() as u64) < end {
            let next = self.entry(self.base + self.window.len() as u64);
            self.window.push_back(next);
        }
        let from = (start - self.base) as usize;
        let to = (end - self.base) as usize;
        self.window.range(from..to)
    }

    /// First feed index not yet included on top of `store`'s state at `parent`.
    fn first_pending(&self, state: &crate::chain::LedgerState) -> u64 {
        let count = self.users.len() as u64;
        (0..count)
            .map(|u| state.next_sequence(AccountId(USER_BASE + u)) * count + u)
            .min()
            .unwrap_or(0)
    }
}


struct GrindJob {
    template: BlockTemplate,
    nonce: u64,
}

struct ChainNode {
    identity: Identity,
    store: ChainStore,
    hashpower: f64,
    parked: HashMap<Digest, Vec<Arc<Block>>>,
    parked_ids: HashSet<Digest>,
    evidence: HashSet<Digest>,
    generation: u64,
    grind: Option<GrindJob>,
}

pub struct ChainWorld {
    cfg: ScenarioConfig,
    seed: u64,
    nodes: Vec<ChainNode>,
    feed: Option<TxFeed>,
    rates: BTreeMap<AccountId, f64>,
    interval_rng: SimRng,
    fault_rng: SimRng,
    observer: NodeId,
    observation: ChainObservation,
    tx_counts: HashMap<Digest, u64>,
    bytes_series: MetricSeries,
    genesis_stake: u128,
    stopped: bool,
    slashed_at_observer: u64,
    faulty_blocks: u64,
    last_prune: Option<PruneReport>,
    rejections: BTreeMap<&'static str, u64>,
}

impl ChainWorld {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Self {
        let n = cfg.scenario.nodes;
        let c = &cfg.chain;
        let mut keyring = Keyring::with_accounts(seed, n as u64);
        let users: Vec<Identity> = match c.load {
            LoadKind::Saturated => (0..c.users)
                .map(|u| Identity::derive(seed, AccountId(USER_BASE + u)))
                .collect(),
            LoadKind::None => Vec::new(),
        };
        for u in &users {
            keyring.insert(u.clone());
        }
        let keyring = Arc::new(keyring);
        let hashpower = cfg.hashpower();
        let total_hashpower: f64 = hashpower.iter().sum();
        let schedule = match cfg.pow.mode {
            PowMode::Lottery => DifficultySchedule::for_hashrate(
                cfg.pow.target_interval_s,
                cfg.pow.retarget_window,
                total_hashpower,
            ),
            PowMode::Grind => DifficultySchedule::new(
                cfg.pow.target_interval_s,
                cfg.pow.retarget_window,
                2f64.powi(cfg.pow.difficulty_bits as i32),
            ),
        };
        let params = ChainParams {
            block_reward: c.block_reward,
            capacity_units: c.capacity_units,
            initial_schedule: schedule,
            ..Default::default()
        };
        let stakes = cfg.stakes();
        let consensus = match (c.consensus, cfg.pow.mode) {
            (ConsensusKind::Pos, _) => Consensus::Stake {
                registry: StakeRegistry::from_deposits(
                    stakes.iter().enumerate().map(|(i, s)| (AccountId(i as u64), *s)),
                ),
                seed,
            },
            (ConsensusKind::Pow, PowMode::Lottery) => Consensus::Lottery {
                miners: (0..n as u64).map(AccountId).collect(),
            },
            (ConsensusKind::Pow, PowMode::Grind) => Consensus::Grind,
        };
        let genesis: Vec<(AccountId, u64)> = users.iter().map(|u| (u.id(), c.user_balance)).collect();
        let base = ChainStore::new(genesis, params, consensus, keyring.clone());
        // Hash rate in digest evaluations per second, so that the whole
        // network meets the target interval at the starting difficulty.
        let hash_scale = schedule.expected_hashes / cfg.pow.target_interval_s / total_hashpower;
        let nodes = (0..n)
            .map(|i| ChainNode {
                identity: keyring.get(AccountId(i as u64)).expect("node identity").clone(),
                store: base.clone(),
                hashpower: hashpower[i] * hash_scale,
                parked: HashMap::new(),
                parked_ids: HashSet::new(),
                evidence: HashSet::new(),
                generation: 0,
                grind: None,
            })
            .collect();
        let genesis_stake = match c.consensus {
            ConsensusKind::Pos => stakes.iter().map(|s| *s as u128).sum(),
            ConsensusKind::Pow => 0,
        };
        ChainWorld {
            cfg: cfg.clone(),
            seed,
            nodes,
            feed: (!users.is_empty()).then(|| TxFeed {
                users,
                weight: c.tx_weight,
                base: 0,
                window: VecDeque::new(),
            }),
            rates: hashpower
                .iter()
                .enumerate()
                .map(|(i, h)| (AccountId(i as u64), *h))
                .collect(),
            interval_rng: derive_rng(seed, "chain/intervals", 0),
            fault_rng: derive_rng(seed, "chain/faults", 0),
            observer: cfg.scenario.observer,
            observation: ChainObservation::default(),
            tx_counts: HashMap::new(),
            bytes_series: MetricSeries::new("ledger_bytes", "bytes"),
            genesis_stake,
            stopped: false,
            slashed_at_observer: 0,
            faulty_blocks: 0,
            last_prune: None,
            rejections: BTreeMap::new(),
        }
    }

    /// Schedules the first production events.
    pub fn start(&mut self, net: &mut Network<ChainMsg>) {
        match (self.cfg.chain.consensus, self.cfg.pow.mode) {
            (ConsensusKind::Pos, _) => {
                let at = from_seconds(self.cfg.pos.slot_interval_s);
                for node in 0..self.nodes.len() {
                    net.set_timer(node, at, timer_token(SLOT, 1)).expect("future");
                }
            }
            (ConsensusKind::Pow, PowMode::Lottery) => {
                let hashes = self.cfg_schedule().expected_hashes;
                self.schedule_round(0, hashes, net);
            }
            (ConsensusKind::Pow, PowMode::Grind) => {
                for node in 0..self.nodes.len() {
                    self.start_grind(node, net);
                }
            }
        }
        if let Some(at) = self.cfg.debug.conservation_breach_at_s {
            net.command(self.observer, from_seconds(at), ChainMsg::InjectBreach)
                .expect("future");
        }
    }

    fn cfg_schedule(&self) -> DifficultySchedule {
        self.nodes[0].store.params().initial_schedule
    }

    pub fn observer_store(&self) -> &ChainStore {
        &self.nodes[self.observer].store
    }

    pub fn store(&self, node: NodeId) -> &ChainStore {
        &self.nodes[node].store
    }

    pub fn observation(&self) -> &ChainObservation {
        &self.observation
    }

    fn schedule_round(&mut self, round: u64, expected_hashes: f64, net: &mut Network<ChainMsg>) {
        if self.stopped {
            return;
        }
        let total: f64 = self.rates.values().sum();
        let delay = Exp::new(total / expected_hashes)
            .expect("positive rate")
            .sample(&mut self.interval_rng);
        let winner = lottery_next_leader(&self.rates, self.seed, round).expect("positive hash power");
        let at = net.now() + from_seconds(delay).max(1);
        net.set_timer(winner.0 as NodeId, at, timer_token(LOTTERY, round))
            .expect("future");
    }

    fn template(&mut self, node: NodeId, now: SimTime) -> BlockTemplate {
        let store = &self.nodes[node].store;
        let parent = store.head();
        let producer = self.nodes[node].identity.id();
        let capacity = store.params().capacity_units;
        let template = match self.feed.as_mut() {
            Some(feed) => {
                let start = feed.first_pending(store.state());
                let per_block = capacity / feed.weight;
                let candidates = feed.range(start, start + 2 * per_block, 8 * per_block);
                assemble_from(candidates, store, parent, capacity, producer, now)
            }
            None => assemble_from([], store, parent, capacity, producer, now),
        };
        template.expect("head is always known")
    }

    fn publish(&mut self, node: NodeId, block: Block, net: &mut Network<ChainMsg>) {
        let block = Arc::new(block);
        self.observation.mined.insert(block.id());
        if self.cfg.chain.stop_at_height > 0 && block.header.height >= self.cfg.chain.stop_at_height {
            self.stopped = true;
        }
        self.on_block(node, None, block, net);
    }

    fn start_grind(&mut self, node: NodeId, net: &mut Network<ChainMsg>) {
        if self.stopped || self.nodes[node].hashpower <= 0.0 {
            return;
        }
        let now = net.now();
        let template = self.template(node, now);
        let n = &mut self.nodes[node];
        n.generation += 1;
        let bits = n
            .store
            .next_schedule(&n.store.head())
            .expect("head stored")
            .leading_zero_bits();
        let seed = digest_parts(&[
            b"grind",
            &self.seed.to_be_bytes(),
            &(node as u64).to_be_bytes(),
            &n.generation.to_be_bytes(),
        ])
        .prefix_u64();
        let solution = mine(&template.header.work_payload(), bits, seed).expect("budget covers difficulty");
        let delay = solution.attempts as f64 / n.hashpower;
        n.grind = Some(GrindJob {
            template,
            nonce: solution.nonce,
        });
        let at = now + from_seconds(delay).max(1);
        net.set_timer(node, at, timer_token(GRIND, n.generation)).expect("future");
    }

    fn on_slot(&mut self, node: NodeId, slot: u64, net: &mut Network<ChainMsg>) {
        let me = self.nodes[node].identity.id();
        let leader = self.nodes[node]
            .store
            .consensus()
            .registry()
            .and_then(|r| pos_select(r, self.seed, slot).ok());
        if leader == Some(me) && !self.stopped {
            let now = net.now();
            let faulty = self.cfg.pos.faulty.contains(&node)
                && self.fault_rng.random::<f64>() < self.cfg.pos.fault_prob;
            let template = self.template(node, now);
            if faulty {
                self.publish_faulty(node, template, slot, net);
            } else {
                let block = template.seal(&self.nodes[node].identity, slot);
                self.publish(node, block, net);
            }
        }
        let next = net.now() + from_seconds(self.cfg.pos.slot_interval_s);
        net.set_timer(node, next, timer_token(SLOT, slot + 1)).expect("future");
    }

    /// Seals a block carrying an overspend by the producer itself.
    fn publish_faulty(&mut self, node: NodeId, mut template: BlockTemplate, slot: u64, net: &mut Network<ChainMsg>) {
        let n = &self.nodes[node];
        let state = n.store.state();
        let me = n.identity.id();
        let weight = self.cfg.chain.tx_weight;
        let overspend = ChainTransaction::signed(
            &n.identity,
            AccountId(USER_BASE),
            state.balance(me) + self.cfg.chain.block_reward + 1,
            state.next_sequence(me),
            weight,
        );
        while template.total_weight() + weight > self.cfg.chain.capacity_units {
            template.transactions.pop();
        }
        template.transactions.push(overspend);
        template.header.tx_root = merkle_root(
            &template.transactions.iter().map(ChainTransaction::id).collect::<Vec<_>>(),
        );
        let block = Arc::new(template.seal(&n.identity, slot));
        self.faulty_blocks += 1;
        self.nodes[node].evidence.insert(block.id());
        net.broadcast(node, &ChainMsg::Block(block));
    }

    fn on_block(&mut self, node: NodeId, from: Option<NodeId>, block: Arc<Block>, net: &mut Network<ChainMsg>) {
        let id = block.id();
        {
            let n = &self.nodes[node];
            if n.store.contains(&id) || n.evidence.contains(&id) || n.parked_ids.contains(&id) {
                return;
            }
        }
        let result = self.nodes[node].store.process(block.clone());
        match result {
            Ok(report) => {
                if report.duplicate {
                    return;
                }
                net.broadcast(node, &ChainMsg::Block(block.clone()));
                if node == self.observer {
                    self.tx_counts.insert(id, block.transactions.len() as u64);
                    if report.head_changed() {
                        self.observer_head_changed(report.reorg_depth() as u64, net.now());
                    }
                }
                if report.head_changed() && self.cfg.pow.mode == PowMode::Grind && self.cfg.chain.consensus == ConsensusKind::Pow {
                    self.start_grind(node, net);
                }
                let children = self.nodes[node].parked.remove(&id).unwrap_or_default();
                for child in children {
                    self.nodes[node].parked_ids.remove(&child.id());
                    self.on_block(node, None, child, net);
                }
            }
            Err(Verdict::UnknownParent) => {
                let parent = block.header.predecessor;
                let n = &mut self.nodes[node];
                n.parked_ids.insert(id);
                n.parked.entry(parent).or_default().push(block);
                if let Some(peer) = from {
                    net.send(node, peer, ChainMsg::Request(parent));
                }
            }
            Err(verdict) if verdict.is_misbehaviour() => {
                let n = &mut self.nodes[node];
                n.evidence.insert(id);
                let keyring = n.store.keyring().clone();
                let producer = block.header.producer;
                if let Some(registry) = n.store.consensus_mut().registry_mut() {
                    if let Ok(amount) = registry.slash(producer, &block, &verdict, &keyring) {
                        if node == self.observer {
                            self.slashed_at_observer += amount;
                        }
                    }
                }
                *self.rejections.entry(verdict.label()).or_default() += 1;
                net.broadcast(node, &ChainMsg::Block(block));
            }
            Err(verdict) => {
                *self.rejections.entry(verdict.label()).or_default() += 1;
            }
        }
    }

    fn observer_head_changed(&mut self, reorg_depth: u64, now: SimTime) {
        let threshold = self.cfg.chain.confirm_threshold;
        let keep = self.cfg.chain.prune_keep_recent;
        let store = &mut self.nodes[self.observer].store;
        self.observation.on_head_change(store, now, threshold);
        if reorg_depth > 0 {
            self.observation.reorg_depths.push((now, reorg_depth));
        }
        let height = store.head_height();
        if keep > 0 && height > keep && height % PRUNE_EVERY == 0 {
            self.last_prune = Some(store.prune(keep).expect("keep validated against the safety window"));
        }
        self.bytes_series
            .push(seconds(now), store.ledger_bytes().total() as f64);
    }

    pub fn report(&self, scenario: &str, trace_digest: Digest, events: u64) -> ScenarioReport {
        let cfg = &self.cfg;
        let store = self.observer_store();
        let mut report = ScenarioReport {
            scenario: scenario.to_string(),
            seed: self.seed,
            paradigm: Paradigm::Blockchain,
            digest_algorithm: crate::primitives::DIGEST_ALGORITHM.to_string(),
            config: cfg.to_json(),
            trace_digest: trace_digest.to_hex(),
            events,
            scalars: BTreeMap::new(),
            series: Vec::new(),
            summaries: BTreeMap::new(),
            invariants: Vec::new(),
        };
        let view = RunView::Chain(ChainRun {
            observer: store,
            observation: &self.observation,
        });
        let cap = tps_cap(cfg.chain.capacity_units, cfg.chain.tx_weight, cfg.block_interval_s())
            .expect("validated config");
        report.set_scalar("tps_cap", "tx/s", cap);
        let head_time = seconds(store.head_header().timestamp_us);
        let adopted: u64 = store.main_chain()[1..]
            .iter()
            .map(|id| self.tx_counts.get(id).copied().unwrap_or(0))
            .sum();
        report.set_scalar("head_height", "blocks", store.head_height() as f64);
        report.set_scalar("head_time", "s", head_time);
        report.set_scalar("adopted_txs", "tx", adopted as f64);
        let tps = if head_time > 0.0 { adopted as f64 / head_time } else { 0.0 };
        report.set_scalar("tps_measured", "tx/s", tps);
        if store.head_height() > 0 {
            report.set_scalar("mean_block_interval", "s", head_time / store.head_height() as f64);
        }
        report.set_scalar("blocks_mined", "blocks", self.observation.mined.len() as f64);
        report.set_scalar("orphan_rate", "ratio", measure_orphan_rate(&view).expect("chain run"));
        report.set_scalar("reorgs", "count", self.observation.reorg_depths.len() as f64);
        let max_reorg = self.observation.reorg_depths.iter().map(|r| r.1).max().unwrap_or(0);
        report.set_scalar("max_reorg_depth", "blocks", max_reorg as f64);
        report.set_scalar("confirm_threshold", "blocks", cfg.chain.confirm_threshold as f64);
        for d in 1..=SURVIVAL_DEPTHS {
            let t = measure_confirmation_survival(&view, d).expect("chain run");
            report.set_scalar(&format!("survival_reached_d{d}"), "blocks", t.reached as f64);
            report.set_scalar(&format!("survival_survived_d{d}"), "blocks", t.survived as f64);
            if let Some(p) = t.estimate() {
                report.set_scalar(&format!("survival_d{d}"), "ratio", p);
            }
        }
        let bytes = store.ledger_bytes();
        for (name, value) in bytes.categories() {
            report.set_scalar(&format!("ledger_bytes_{name}"), "bytes", value as f64);
        }
        report.set_scalar("ledger_bytes_total", "bytes", bytes.total() as f64);
        if let Some(p) = &self.last_prune {
            report.set_scalar("prune_bytes_before", "bytes", p.bytes_before as f64);
            report.set_scalar("prune_bytes_after", "bytes", p.bytes_after as f64);
        }
        report.set_scalar(
            "difficulty_expected_hashes",
            "hashes",
            store.next_schedule(&store.head()).expect("head").expected_hashes,
        );
        if let Some(registry) = store.consensus().registry() {
            report.set_scalar("stake_total", "tokens", registry.total_stake() as f64);
            report.set_scalar("stake_burned", "tokens", registry.burned() as f64);
            report.set_scalar("slashed_observed", "tokens", self.slashed_at_observer as f64);
            report.set_scalar("faulty_blocks", "blocks", self.faulty_blocks as f64);
            let supply = store.state().total_balance() + registry.total_stake() as u128;
            report.set_scalar("supply", "tokens", supply as f64);
        }
        for (label, count) in &self.rejections {
            report.set_scalar(&format!("rejected_{label}"), "blocks", *count as f64);
        }
        let mut latency = MetricSeries::new("confirmation_latency", "s");
        for (at, value) in &self.observation.confirmation_latency {
            latency.push(seconds(*at), *value);
        }
        report.add_series(latency);
        report.add_series(self.bytes_series.clone());
        report
    }
}

impl Protocol for ChainWorld {
    type Message = ChainMsg;

    fn on_event(&mut self, node: NodeId, event: EventKind<ChainMsg>, net: &mut Network<ChainMsg>) {
        match event {
            EventKind::Deliver { from, message, .. } => match message {
                ChainMsg::Block(block) => self.on_block(node, Some(from), block, net),
                ChainMsg::Request(id) => {
                    if let Some(block) = self.nodes[node].store.block(&id) {
                        net.send(node, from, ChainMsg::Block(block.clone()));
                    }
                }
                ChainMsg::InjectBreach => {}
            },
            EventKind::Command(ChainMsg::InjectBreach) => {
                self.nodes[node]
                    .store
                    .inject_unbacked_credit(AccountId(USER_BASE), 1);
            }
            EventKind::Command(_) => {}
            EventKind::Timer { token } => {
                let (kind, value) = split_token(token);
                match kind {
                    LOTTERY => {
                        if self.stopped {
                            return;
                        }
                        let now = net.now();
                        let template = self.template(node, now);
                        let block = template.seal(&self.nodes[node].identity, value);
                        self.publish(node, block, net);
                        let store = &self.nodes[node].store;
                        let hashes = store
                            .next_schedule(&store.head())
                            .expect("head stored")
                            .expected_hashes;
                        self.schedule_round(value + 1, hashes, net);
                    }
                    GRIND => {
                        let n = &mut self.nodes[node];
                        if value != n.generation || self.stopped {
                            return;
                        }
                        let job = n.grind.take().expect("live generation has a job");
                        let block = job.template.seal(&n.identity, job.nonce);
                        self.publish(node, block, net);
                    }
                    SLOT => self.on_slot(node, value, net),
                    _ => unreachable!("unknown chain timer kind {kind}"),
                }
            }
        }
    }

    fn check_invariants(&self, node: NodeId, now: SimTime) -> Result<(), InvariantBreach> {
        let store = &self.nodes[node].store;
        let staked = store
            .consensus()
            .registry()
            .map_or(0, |r| r.total_stake() as u128 + r.burned() as u128);
        let held = store.state().total_balance() + staked;
        let expected = store.expected_supply() + self.genesis_stake;
        if held != expected {
            return Err(InvariantBreach {
                invariant: "balance conservation".into(),
                node,
                at: now,
                detail: format!("balances plus stake {held} != genesis supply plus rewards {expected}"),
            });
        }
        Ok(())
    }
}
