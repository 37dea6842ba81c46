use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::config::ScenarioConfig;
use super::{split_token, timer_token, USER_BASE};
use crate::lattice::{
    resolve_fork, ElectionOutcome, GenesisAccount, Lattice, LatticeAction, LatticeBlock,
    LatticeParams, LatticePruneReport, LatticeVerdict, NodeTier, VoteRecord,
};
use crate::metrics::{
    measure_settlement_latency, LatticeObservation, LatticeRun, MetricSeries, Paradigm, RunView,
    ScenarioReport,
};
use crate::primitives::{digest, AccountId, Digest, Identity, Keyring};
use crate::rng::{derive_rng, SimRng};
use crate::simnet::{
    from_seconds, seconds, EventKind, InvariantBreach, Network, NodeId, Protocol, SimTime, TraceKey,
};

pub const REP_BASE: u64 = 500_000;
pub const ATTACKER_BASE: u64 = 900_000;

const SEND: u8 = 1;
const CEMENT: u8 = 2;
const PRUNE: u8 = 3;
const SAMPLE: u8 = 4;

const BYTES_SAMPLES: f64 = 100.0;

#[derive(Clone, Debug)]
pub enum LatticeMsg {
    Block {
        block: Arc<LatticeBlock>,
        vote: Option<VoteRecord>,
    },
    Vote(VoteRecord),
    /// Tells the attacker node to sign conflicting sends.
    Attack(u64),
    InjectBreach,
}

impl TraceKey for LatticeMsg {
    fn trace_key(&self) -> Digest {
        match self {
            LatticeMsg::Block { block, vote: None } => block.hash(),
            LatticeMsg::Block { block, vote: Some(v) } => {
                crate::primitives::digest_parts(&[block.hash().as_bytes(), v.id().as_bytes()])
            }
            LatticeMsg::Vote(v) => v.id(),
            LatticeMsg::Attack(c) => crate::primitives::digest_parts(&[b"attack", &c.to_be_bytes()]),
            LatticeMsg::InjectBreach => digest(b"inject-breach"),
        }
    }
}

struct LatticeNode {
    lattice: Option<Lattice>,
    representative: Option<Identity>,
    seen: HashSet<Digest>,
    last_prune: Option<LatticePruneReport>,
}

#[derive(Clone, Debug)]
struct Conflict {
    root: Digest,
    injected_at: SimTime,
}

pub struct LatticeWorld {
    cfg: ScenarioConfig,
    seed: u64,
    nodes: Vec<LatticeNode>,
    users: Vec<Identity>,
    attackers: Vec<Identity>,
    host: BTreeMap<AccountId, NodeId>,
    offline: BTreeSet<AccountId>,
    attacker_node: Option<NodeId>,
    send_rngs: Vec<SimRng>,
    attack_rng: SimRng,
    observer: NodeId,
    observation: LatticeObservation,
    conflicts: Vec<Conflict>,
    /// Latest vote each representative emitted, per subject.
    emitted_votes: BTreeMap<(Digest, AccountId), VoteRecord>,
    rollbacks: u64,
    rollback_errors: u64,
    bytes_series: MetricSeries,
    horizon: SimTime,
}

impl LatticeWorld {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Self {
        let l = &cfg.lattice;
        let n = cfg.scenario.nodes;
        let tiers = cfg.tiers();
        let mut keyring = Keyring::new();
        let reps: Vec<Identity> = (0..l.representatives as u64)
            .map(|r| Identity::derive(seed, AccountId(REP_BASE + r)))
            .collect();
        let users: Vec<Identity> = (0..l.accounts)
            .map(|a| Identity::derive(seed, AccountId(USER_BASE + a)))
            .collect();
        let attackers: Vec<Identity> = (0..l.conflicts)
            .map(|c| Identity::derive(seed, AccountId(ATTACKER_BASE + c)))
            .collect();
        let mut genesis = Vec::new();
        for (r, id) in reps.iter().enumerate() {
            genesis.push(GenesisAccount {
                account: id.id(),
                amount: l.rep_balance_unit << r,
                representative: id.id(),
            });
        }
        for (a, id) in users.iter().enumerate() {
            genesis.push(GenesisAccount {
                account: id.id(),
                amount: l.account_balance,
                representative: reps[a % reps.len()].id(),
            });
        }
        for id in &attackers {
            genesis.push(GenesisAccount {
                account: id.id(),
                amount: l.account_balance,
                representative: reps[0].id(),
            });
        }
        for id in reps.iter().chain(&users).chain(&attackers) {
            keyring.insert(id.clone());
        }
        let keyring = Arc::new(keyring);
        let params = LatticeParams {
            spam_difficulty_bits: l.spam_difficulty_bits,
            quorum_fraction: l.quorum_fraction,
            cement_delay_us: l.cement_delay_s.map(from_seconds),
            gap_buffer: l.gap_buffer,
        };
        let attacker_node = (l.conflicts > 0).then_some(n - 1);
        let archive = Lattice::new(&genesis, params, NodeTier::Historical, keyring.clone());
        let nodes: Vec<LatticeNode> = (0..n)
            .map(|i| LatticeNode {
                lattice: (tiers[i] != NodeTier::Light).then(|| archive.clone()),
                representative: reps.get(i).cloned(),
                seen: HashSet::new(),
                last_prune: None,
            })
            .collect();
        let hosts: Vec<NodeId> = (0..n)
            .filter(|&i| tiers[i] != NodeTier::Light && Some(i) != attacker_node)
            .collect();
        let mut host = BTreeMap::new();
        for (a, id) in users.iter().enumerate() {
            host.insert(id.id(), hosts[a % hosts.len()]);
        }
        if let Some(node) = attacker_node {
            for id in &attackers {
                host.insert(id.id(), node);
            }
        }
        assert!(!hosts.is_empty(), "at least one full node must host user accounts");
        LatticeWorld {
            cfg: cfg.clone(),
            seed,
            nodes,
            send_rngs: (0..users.len() as u64)
                .map(|a| derive_rng(seed, "lattice/sends", a))
                .collect(),
            attack_rng: derive_rng(seed, "lattice/attacks", 0),
            offline: l.offline_accounts.iter().map(|a| AccountId(USER_BASE + a)).collect(),
            users,
            attackers,
            host,
            attacker_node,
            observer: cfg.scenario.observer,
            observation: LatticeObservation::default(),
            conflicts: Vec::new(),
            emitted_votes: BTreeMap::new(),
            rollbacks: 0,
            rollback_errors: 0,
            bytes_series: MetricSeries::new("ledger_bytes", "bytes"),
            horizon: from_seconds(cfg.scenario.horizon_s),
        }
    }

    pub fn start(&mut self, net: &mut Network<LatticeMsg>) {
        let l = self.cfg.lattice.clone();
        for a in 0..self.users.len() {
            self.schedule_send(a, net);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let Some(lattice) = &node.lattice else { continue };
            if let Some(delay) = l.cement_delay_s {
                let every = from_seconds((delay / 2.0).max(1.0));
                net.set_timer(i, every, timer_token(CEMENT, every)).expect("future");
            }
            if lattice.tier() == NodeTier::Historical && self.cfg.tiers()[i] == NodeTier::Current {
                let every = from_seconds(l.prune_interval_s);
                net.set_timer(i, every, timer_token(PRUNE, every)).expect("future");
            }
        }
        let every = from_seconds(self.cfg.scenario.horizon_s / BYTES_SAMPLES).max(1);
        net.set_timer(self.observer, 0, timer_token(SAMPLE, every)).expect("future");
        if let Some(node) = self.attacker_node {
            for c in 0..l.conflicts {
                let at = from_seconds(l.attack_start_s + c as f64 * l.attack_spacing_s);
                net.command(node, at, LatticeMsg::Attack(c)).expect("future");
            }
        }
        if let Some(at) = self.cfg.debug.conservation_breach_at_s {
            net.command(self.observer, from_seconds(at), LatticeMsg::InjectBreach)
                .expect("future");
        }
    }

    pub fn lattice(&self, node: NodeId) -> Option<&Lattice> {
        self.nodes[node].lattice.as_ref()
    }

    pub fn observer_lattice(&self) -> &Lattice {
        self.lattice(self.observer).expect("observer holds a ledger")
    }

    pub fn observation(&self) -> &LatticeObservation {
        &self.observation
    }

    fn schedule_send(&mut self, account: usize, net: &mut Network<LatticeMsg>) {
        let rate = self.cfg.lattice.send_rate_per_s;
        if rate <= 0.0 || self.offline.contains(&self.users[account].id()) {
            return;
        }
        let delay = Exp::new(rate).expect("positive rate").sample(&mut self.send_rngs[account]);
        let at = net.now() + from_seconds(delay).max(1);
        if at <= self.horizon {
            net.set_timer(self.host[&self.users[account].id()], at, timer_token(SEND, account as u64))
                .expect("future");
        }
    }

    fn on_send_timer(&mut self, node: NodeId, account: usize, net: &mut Network<LatticeMsg>) {
        let owner = self.users[account].clone();
        let others = self.users.len() as u64 - 1;
        let rng = &mut self.send_rngs[account];
        let pick = rng.random_range(0..others);
        let recipient = self.users[(if pick >= account as u64 { pick + 1 } else { pick }) as usize].id();
        let lattice = self.nodes[node].lattice.as_ref().expect("hosts hold a ledger");
        let balance = lattice.balance(owner.id());
        if balance > 0 {
            let amount = rng.random_range(1..=balance.min(100));
            if let Ok((block, _)) = lattice.create_send(&owner, recipient, amount) {
                self.observation.on_send_created(block.hash(), net.now());
                self.on_block(node, None, Arc::new(block), None, net);
            }
        }
        self.schedule_send(account, net);
    }

    fn on_attack(&mut self, node: NodeId, conflict: u64, net: &mut Network<LatticeMsg>) {
        let attacker = self.attackers[conflict as usize].clone();
        let lattice = self.nodes[node].lattice.as_ref().expect("attacker holds a ledger");
        let balance = lattice.balance(attacker.id());
        let x = self.attack_rng.random_range(0..self.users.len());
        let y = (x + 1 + self.attack_rng.random_range(0..self.users.len() - 1)) % self.users.len();
        let amount = (balance / 2).max(1);
        let (Ok((a, _)), Ok((b, _))) = (
            lattice.create_send(&attacker, self.users[x].id(), amount),
            lattice.create_send(&attacker, self.users[y].id(), amount),
        ) else {
            return;
        };
        let now = net.now();
        self.conflicts.push(Conflict {
            root: a.root(),
            injected_at: now,
        });
        let (a, b) = (Arc::new(a), Arc::new(b));
        // The attacker's own node learns of each side only through relays.
        for block in [&a, &b] {
            self.observation.on_send_created(block.hash(), now);
        }
        let peers = net.peers(node).to_vec();
        for (k, peer) in peers.into_iter().enumerate() {
            let block = if k % 2 == 0 { a.clone() } else { b.clone() };
            net.send(node, peer, LatticeMsg::Block { block, vote: None });
        }
    }

    fn rep_of(&self, node: NodeId) -> Option<AccountId> {
        self.nodes[node].representative.as_ref().map(Identity::id)
    }

    /// Signs, records and returns this node's vote for `choice` on `subject`.
    fn cast_vote(&mut self, node: NodeId, subject: Digest, choice: Digest) -> Option<VoteRecord> {
        let n = &mut self.nodes[node];
        let rep = n.representative.as_ref()?;
        let lattice = n.lattice.as_mut()?;
        let sequence = match lattice.vote_of(&subject, rep.id()) {
            Some(prev) if prev.choice == choice => return None,
            Some(prev) => prev.sequence + 1,
            None => 0,
        };
        let weight = lattice.representative_weight(rep.id());
        let vote = VoteRecord::new(rep, subject, choice, weight, sequence);
        lattice.record_vote(vote);
        self.emitted_votes.insert((subject, rep.id()), vote);
        Some(vote)
    }

    fn on_block(
        &mut self,
        node: NodeId,
        from: Option<NodeId>,
        block: Arc<LatticeBlock>,
        vote: Option<VoteRecord>,
        net: &mut Network<LatticeMsg>,
    ) {
        let hash = block.hash();
        let first_sight = self.nodes[node].lattice.is_some() && self.nodes[node].seen.insert(hash);
        if first_sight {
            let now = net.now();
            let lattice = self.nodes[node].lattice.as_mut().expect("checked");
            let outcome = lattice.process(block.clone(), now);
            let verdict = outcome.verdict.expect("process sets a verdict");
            let mut attached = None;
            match verdict {
                LatticeVerdict::Accept => {
                    for applied in &outcome.applied {
                        let v = self.cast_vote(node, applied.root(), applied.hash());
                        if applied.hash() == hash {
                            attached = v;
                        } else if let Some(v) = v {
                            net.broadcast(node, &LatticeMsg::Vote(v));
                        }
                    }
                }
                LatticeVerdict::ForkDetected { existing } => {
                    // A representative backs the block it saw first.
                    if let (Some(root), Some(rep)) = (outcome.fork_root, self.rep_of(node)) {
                        let voted = self.nodes[node]
                            .lattice
                            .as_ref()
                            .is_some_and(|l| l.vote_of(&root, rep).is_some());
                        if !voted {
                            if let Some(v) = self.cast_vote(node, root, existing) {
                                net.broadcast(node, &LatticeMsg::Vote(v));
                            }
                        }
                    }
                }
                _ => {}
            }
            let relay = matches!(
                verdict,
                LatticeVerdict::Accept
                    | LatticeVerdict::ForkDetected { .. }
                    | LatticeVerdict::GapDetected { .. }
            );
            if relay {
                let msg = LatticeMsg::Block {
                    block: block.clone(),
                    vote: attached,
                };
                for peer in net.peers(node).to_vec() {
                    if Some(peer) != from {
                        net.send(node, peer, msg.clone());
                    } else if let Some(v) = attached {
                        net.send(node, peer, LatticeMsg::Vote(v));
                    }
                }
            }
            for applied in outcome.applied {
                self.on_applied(node, applied, net);
            }
            if let Some(root) = outcome.fork_root {
                self.review_election(node, root, net);
            }
        }
        if let Some(vote) = vote {
            self.on_vote(node, vote, net);
        }
    }

    fn on_vote(&mut self, node: NodeId, vote: VoteRecord, net: &mut Network<LatticeMsg>) {
        let Some(lattice) = self.nodes[node].lattice.as_mut() else { return };
        if !lattice.record_vote(vote) {
            return;
        }
        if lattice.election(&vote.subject).is_some_and(|e| e.is_open()) {
            self.review_election(node, vote.subject, net);
        }
    }

    /// Re-votes toward a strict leader, then tries to settle.
    fn review_election(&mut self, node: NodeId, root: Digest, net: &mut Network<LatticeMsg>) {
        let Some(lattice) = self.nodes[node].lattice.as_ref() else { return };
        if !lattice.election(&root).is_some_and(|e| e.is_open()) {
            return;
        }
        if let Some(leader) = lattice.leading_candidate(&root) {
            if let Some(v) = self.cast_vote(node, root, leader) {
                net.broadcast(node, &LatticeMsg::Vote(v));
            }
        }
        let now = net.now();
        let lattice = self.nodes[node].lattice.as_mut().expect("checked");
        match lattice.settle_election(&root, now) {
            Ok(Some(outcome)) => self.on_settled(node, outcome, net),
            Ok(None) => {}
            Err(_) => self.rollback_errors += 1,
        }
    }

    fn on_settled(&mut self, node: NodeId, outcome: ElectionOutcome, net: &mut Network<LatticeMsg>) {
        self.rollbacks += outcome.rolled_back.len() as u64;
        for gone in &outcome.rolled_back {
            if let LatticeAction::Receive { source, .. } = gone.action() {
                if node == self.observer {
                    self.observation.on_receive_rolled_back(*source);
                }
            }
        }
        for applied in outcome.applied {
            self.on_applied(node, applied, net);
        }
        // Receives of surviving sends that were swept away with the losing
        // branch are issued again by the recipient's host.
        for gone in outcome.rolled_back.iter().rev() {
            if let LatticeAction::Receive { source, .. } = gone.action() {
                self.try_receive(node, gone.account(), *source, net);
            }
        }
    }

    fn on_applied(&mut self, node: NodeId, block: Arc<LatticeBlock>, net: &mut Network<LatticeMsg>) {
        match *block.action() {
            LatticeAction::Receive { source, .. } => {
                if node == self.observer {
                    self.observation.on_receive_applied(source, net.now());
                }
            }
            LatticeAction::Send { recipient, .. } => {
                self.try_receive(node, recipient, block.hash(), net);
            }
            _ => {}
        }
    }

    fn try_receive(&mut self, node: NodeId, account: AccountId, send: Digest, net: &mut Network<LatticeMsg>) {
        if self.host.get(&account) != Some(&node) || self.offline.contains(&account) {
            return;
        }
        let Some(owner) = self.users.iter().find(|u| u.id() == account).cloned() else {
            return;
        };
        let lattice = self.nodes[node].lattice.as_ref().expect("hosts hold a ledger");
        if let Ok((block, _)) = lattice.create_receive(&owner, send) {
            self.on_block(node, None, Arc::new(block), None, net);
        }
    }

    fn honest_nodes(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].lattice.is_some() && Some(i) != self.attacker_node)
            .collect()
    }

    /// No send is both pending and received, and each recorded receive
    /// claims exactly the send it is indexed under.
    fn single_settlement_holds(&self) -> bool {
        let lattice = self.observer_lattice();
        lattice.pending().keys().all(|send| !lattice.is_settled(send))
            && self.observation.transfers.keys().all(|send| {
                lattice.receive_of(send).is_none_or(|r| {
                    lattice.block(&r).is_none_or(|b| {
                        matches!(b.action(), LatticeAction::Receive { source, .. } if source == send)
                    })
                })
            })
    }

    pub fn report(&self, scenario: &str, trace_digest: Digest, events: u64) -> ScenarioReport {
        let cfg = &self.cfg;
        let lattice = self.observer_lattice();
        let mut report = ScenarioReport {
            scenario: scenario.to_string(),
            seed: self.seed,
            paradigm: Paradigm::Lattice,
            digest_algorithm: crate::primitives::DIGEST_ALGORITHM.to_string(),
            config: cfg.to_json(),
            trace_digest: trace_digest.to_hex(),
            events,
            scalars: BTreeMap::new(),
            series: Vec::new(),
            summaries: BTreeMap::new(),
            invariants: Vec::new(),
        };
        let view = RunView::Lattice(LatticeRun {
            observation: &self.observation,
        });
        let latency = measure_settlement_latency(&view).expect("lattice run");
        let horizon = cfg.scenario.horizon_s;
        let settled = self.observation.settled_count();
        report.set_scalar("accounts", "accounts", cfg.lattice.accounts as f64);
        report.set_scalar("sends_created", "tx", self.observation.transfers.len() as f64);
        report.set_scalar("settled", "tx", settled as f64);
        report.set_scalar("unsettled", "tx", latency.unsettled.len() as f64);
        if horizon > 0.0 {
            report.set_scalar("settled_tps", "tx/s", settled as f64 / horizon);
        }
        report.set_scalar("blocks_applied", "blocks", lattice.applied_block_count() as f64);
        report.set_scalar("parked", "blocks", lattice.parked_len() as f64);
        report.set_scalar("parked_evicted", "blocks", lattice.parked_evicted() as f64);
        let cemented: u64 = lattice.accounts().values().map(|c| c.cemented_count).sum();
        report.set_scalar("cemented", "blocks", cemented as f64);
        report.set_scalar("rollbacks", "blocks", self.rollbacks as f64);
        report.set_scalar("rollback_errors", "count", self.rollback_errors as f64);
        let bytes = lattice.ledger_bytes();
        for (name, value) in bytes.categories() {
            report.set_scalar(&format!("ledger_bytes_{name}"), "bytes", value as f64);
        }
        report.set_scalar("ledger_bytes_total", "bytes", bytes.total() as f64);
        let tiers = cfg.tiers();
        if let Some(i) = tiers.iter().position(|t| *t == NodeTier::Current) {
            if let Some(l) = &self.nodes[i].lattice {
                report.set_scalar("current_tier_bytes_total", "bytes", l.ledger_bytes().total() as f64);
            }
            if let Some(p) = &self.nodes[i].last_prune {
                report.set_scalar("prune_bytes_before", "bytes", p.bytes_before as f64);
                report.set_scalar("prune_bytes_after", "bytes", p.bytes_after as f64);
            }
        }

        let honest = self.honest_nodes();
        let mut converged = 0;
        let mut majority_match = 0;
        let mut convergence = MetricSeries::new("convergence_time", "s");
        let mut decided_times = Vec::new();
        for conflict in &self.conflicts {
            let decisions: Vec<Option<(Digest, u64)>> = honest
                .iter()
                .map(|&i| {
                    let e = self.nodes[i].lattice.as_ref()?.election(&conflict.root)?;
                    Some((e.decided?, e.decided_at_us?))
                })
                .collect();
            let winners: BTreeSet<Option<Digest>> = decisions.iter().map(|d| d.map(|x| x.0)).collect();
            if winners.len() == 1 {
                if let Some(Some(winner)) = winners.into_iter().next() {
                    converged += 1;
                    let last = decisions.iter().flatten().map(|d| d.1).max().unwrap_or(conflict.injected_at);
                    decided_times.push((last, seconds(last.saturating_sub(conflict.injected_at))));
                    let votes: Vec<&VoteRecord> = self
                        .emitted_votes
                        .range((conflict.root, AccountId(0))..=(conflict.root, AccountId(u64::MAX)))
                        .map(|(_, v)| v)
                        .collect();
                    let candidates: Vec<Digest> = lattice
                        .election(&conflict.root)
                        .map(|e| e.candidate_ids())
                        .unwrap_or_default();
                    let mut all: BTreeSet<Digest> = votes.iter().map(|v| v.choice).collect();
                    all.extend(candidates);
                    let all: Vec<Digest> = all.into_iter().collect();
                    let majority = resolve_fork(
                        conflict.root,
                        &all,
                        votes.iter().copied(),
                        lattice.total_weight(),
                        cfg.lattice.quorum_fraction,
                    );
                    if majority.winner() == Some(winner) {
                        majority_match += 1;
                    }
                }
            }
        }
        decided_times.sort_by(|a, b| a.0.cmp(&b.0));
        for (at, value) in decided_times {
            convergence.push(seconds(at), value);
        }
        let ties = lattice.elections().values().filter(|e| e.permanent_tie).count();
        report.set_scalar("conflicts_injected", "count", self.conflicts.len() as f64);
        report.set_scalar("conflicts_converged", "count", converged as f64);
        report.set_scalar("conflicts_majority_match", "count", majority_match as f64);
        report.set_scalar("elections", "count", lattice.elections().len() as f64);
        report.set_scalar("permanent_ties", "count", ties as f64);
        report.add_series(latency.series);
        report.add_series(convergence);
        report.add_series(self.bytes_series.clone());
        report
    }

    /// End-of-run checks too costly to run after every event.
    pub fn final_checks(&self) -> Vec<(String, bool)> {
        let weights_ok = self
            .nodes
            .iter()
            .filter_map(|n| n.lattice.as_ref())
            .all(|l| l.weights_by_scan() == *l.weights());
        vec![
            ("representative weight consistency".into(), weights_ok),
            ("single settlement".into(), self.single_settlement_holds()),
        ]
    }
}

impl Protocol for LatticeWorld {
    type Message = LatticeMsg;

    fn on_event(&mut self, node: NodeId, event: EventKind<LatticeMsg>, net: &mut Network<LatticeMsg>) {
        match event {
            EventKind::Deliver { from, message, .. } => match message {
                LatticeMsg::Block { block, vote } => self.on_block(node, Some(from), block, vote, net),
                LatticeMsg::Vote(vote) => self.on_vote(node, vote, net),
                LatticeMsg::Attack(_) | LatticeMsg::InjectBreach => {}
            },
            EventKind::Command(LatticeMsg::Attack(c)) => self.on_attack(node, c, net),
            EventKind::Command(LatticeMsg::InjectBreach) => {
                let victim = self.users[0].id();
                if let Some(l) = self.nodes[node].lattice.as_mut() {
                    l.inject_unbacked_credit(victim, 1);
                }
            }
            EventKind::Command(_) => {}
            EventKind::Timer { token } => {
                let (kind, value) = split_token(token);
                let now = net.now();
                match kind {
                    SEND => self.on_send_timer(node, value as usize, net),
                    CEMENT => {
                        if let Some(l) = self.nodes[node].lattice.as_mut() {
                            l.cement_all(now);
                        }
                        net.set_timer(node, now + value, token).expect("future");
                    }
                    PRUNE => {
                        let n = &mut self.nodes[node];
                        if let Some(l) = n.lattice.as_mut() {
                            n.last_prune = l.prune().ok();
                        }
                        net.set_timer(node, now + value, token).expect("future");
                    }
                    SAMPLE => {
                        let total = self.observer_lattice().ledger_bytes().total();
                        self.bytes_series.push(seconds(now), total as f64);
                        if now + value <= self.horizon {
                            net.set_timer(node, now + value, token).expect("future");
                        }
                    }
                    _ => unreachable!("unknown lattice timer kind {kind}"),
                }
            }
        }
    }

    fn check_invariants(&self, node: NodeId, now: SimTime) -> Result<(), InvariantBreach> {
        match &self.nodes[node].lattice {
            Some(l) if !l.conservation_holds() => Err(InvariantBreach {
                invariant: "balance conservation".into(),
                node,
                at: now,
                detail: format!(
                    "settled {} + pending {} != supply {}",
                    l.settled_balance_total(),
                    l.pending_total(),
                    l.supply()
                ),
            }),
            _ => Ok(()),
        }
    }
}
