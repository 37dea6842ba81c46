use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use super::block::{Block, BlockHeader, ChainTransaction, RootKind, Verdict};
use super::state::{LedgerState, StateDelta};
use crate::election::{check_pow, pos_select, retarget, DifficultySchedule, StakeRegistry};
use crate::metrics::LedgerBytes;
use crate::primitives::{AccountId, Digest, Encode, Keyring, MerkleTree, Signature};

/// Blocks below this depth may be pruned; anything shallower must stay to
/// roll back soft forks.
pub const DEFAULT_PRUNE_SAFETY_WINDOW: u64 = 128;
pub const DEFAULT_CONFIRM_THRESHOLD: u64 = 6;
pub const DEFAULT_PIVOT_OFFSET: u64 = 1024;

/// Producer id written into the genesis header; no identity signs genesis.
pub const GENESIS_PRODUCER: AccountId = AccountId(u64::MAX);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("parent {0:?} is not known")]
    OrphanParent(Digest),
    #[error("block rejected: {}", .0.label())]
    Invalid(Verdict),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sync failed: {0}")]
    Sync(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ConfirmationError {
    #[error("transaction not found")]
    NotFound,
    #[error("transaction is not on the adopted chain")]
    NotOnAdoptedChain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub block_reward: u64,
    pub capacity_units: u64,
    pub prune_safety_window: u64,
    pub initial_schedule: DifficultySchedule,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            block_reward: 50,
            capacity_units: 1_000_000,
            prune_safety_window: DEFAULT_PRUNE_SAFETY_WINDOW,
            initial_schedule: DifficultySchedule::new(600.0, 16, 1.0),
        }
    }
}

/// Block-producer proof rule a store enforces.
#[derive(Debug, Clone, PartialEq)]
pub enum Consensus {
    /// Any sealed block is acceptable. Used by unit tests and fixtures.
    Open,
    /// Literal proof of work at the branch's scheduled difficulty.
    Grind,
    /// Hash-rate lottery: the producer must be a registered miner.
    Lottery { miners: BTreeSet<AccountId> },
    /// Stake-weighted slot selection; the header nonce is the slot number.
    Stake { registry: StakeRegistry, seed: u64 },
}

impl Consensus {
    fn accepts(&self, parent: &StoredBlock, header: &BlockHeader) -> bool {
        match self {
            Consensus::Open => true,
            Consensus::Grind => check_pow(
                &header.work_payload(),
                header.nonce,
                parent.next_schedule.leading_zero_bits(),
            ),
            Consensus::Lottery { miners } => miners.contains(&header.producer),
            Consensus::Stake { registry, seed } => {
                pos_select(registry, *seed, header.nonce) == Ok(header.producer)
            }
        }
    }

    pub fn registry(&self) -> Option<&StakeRegistry> {
        match self {
            Consensus::Stake { registry, .. } => Some(registry),
            _ => None,
        }
    }

    pub fn registry_mut(&mut self) -> Option<&mut StakeRegistry> {
        match self {
            Consensus::Stake { registry, .. } => Some(registry),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct StoredBlock {
    pub(crate) header: BlockHeader,
    pub(crate) seal: Signature,
    pub(crate) block: Option<Arc<Block>>,
    /// Difficulty children of this block must meet.
    pub(crate) next_schedule: DifficultySchedule,
}

/// What changed when a block was adopted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdoptionReport {
    pub block: Digest,
    pub head_before: Digest,
    pub head_after: Digest,
    /// Blocks that left the adopted chain, oldest first.
    pub orphaned: Vec<Digest>,
    /// Blocks that joined the adopted chain, oldest first.
    pub adopted: Vec<Digest>,
    /// Transactions only present on the abandoned branch.
    pub reorged_out: Vec<ChainTransaction>,
    pub duplicate: bool,
}

impl AdoptionReport {
    pub fn head_changed(&self) -> bool {
        self.head_before != self.head_after
    }

    pub fn reorg_depth(&self) -> usize {
        self.orphaned.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PruneReport {
    pub bytes_before: u64,
    pub bytes_after: u64,
    pub bodies_dropped: u64,
    pub deltas_dropped: u64,
    /// Lowest height whose body is still retained.
    pub first_full_height: u64,
}

/// Blocks containing a transaction; almost always exactly one.
#[derive(Clone, Debug)]
struct TxHomes {
    first: Digest,
    more: Vec<Digest>,
}

/// One node's view of the blockchain: every block it has accepted, the
/// adopted branch, and the state at the adopted head.
#[derive(Debug, Clone)]
pub struct ChainStore {
    params: ChainParams,
    consensus: Consensus,
    initial_consensus: Consensus,
    keyring: Arc<Keyring>,
    genesis: Arc<Block>,
    genesis_state: LedgerState,
    pub(crate) blocks: HashMap<Digest, StoredBlock>,
    tips: BTreeSet<Digest>,
    pub(crate) main: Vec<Digest>,
    pub(crate) state: LedgerState,
    deltas: HashMap<Digest, StateDelta>,
    tx_index: HashMap<Digest, TxHomes>,
    pub(crate) first_full_height: u64,
    pub(crate) delta_floor: u64,
}

impl ChainStore {
    pub fn new(
        genesis_balances: impl IntoIterator<Item = (AccountId, u64)>,
        params: ChainParams,
        consensus: Consensus,
        keyring: Arc<Keyring>,
    ) -> Self {
        let genesis_state = LedgerState::from_balances(genesis_balances);
        let header = BlockHeader {
            predecessor: Digest::ZERO,
            tx_root: MerkleTree::empty_root(),
            state_root: genesis_state.state_root(),
            height: 0,
            timestamp_us: 0,
            nonce: 0,
            producer: GENESIS_PRODUCER,
        };
        let id = header.id();
        let seal = Signature {
            signer: GENESIS_PRODUCER,
            payload: id,
            tag: Digest::ZERO,
        };
        let genesis = Arc::new(Block::new(header, Vec::new(), seal));
        let mut blocks = HashMap::new();
        blocks.insert(
            id,
            StoredBlock {
                header,
                seal,
                block: Some(genesis.clone()),
                next_schedule: params.initial_schedule,
            },
        );
        ChainStore {
            params,
            initial_consensus: consensus.clone(),
            consensus,
            keyring,
            genesis,
            state: genesis_state.clone(),
            genesis_state,
            blocks,
            tips: BTreeSet::from([id]),
            main: vec![id],
            deltas: HashMap::new(),
            tx_index: HashMap::new(),
            first_full_height: 0,
            delta_floor: 0,
        }
    }

    /// A fresh store with the same genesis, parameters and initial consensus.
    pub fn genesis_only(&self) -> ChainStore {
        ChainStore::new(
            self.genesis_state
                .accounts()
                .iter()
                .map(|(id, st)| (*id, st.balance)),
            self.params,
            self.initial_consensus.clone(),
            self.keyring.clone(),
        )
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }
    pub fn keyring(&self) -> &Arc<Keyring> {
        &self.keyring
    }
    pub fn consensus(&self) -> &Consensus {
        &self.consensus
    }
    pub fn consensus_mut(&mut self) -> &mut Consensus {
        &mut self.consensus
    }
    pub fn genesis(&self) -> &Arc<Block> {
        &self.genesis
    }
    pub fn genesis_state(&self) -> &LedgerState {
        &self.genesis_state
    }
    pub fn head(&self) -> Digest {
        *self.main.last().expect("main chain holds genesis")
    }
    pub fn head_height(&self) -> u64 {
        (self.main.len() - 1) as u64
    }
    pub fn head_header(&self) -> &BlockHeader {
        &self.blocks[&self.head()].header
    }
    pub fn state(&self) -> &LedgerState {
        &self.state
    }
    pub fn balance(&self, account: AccountId) -> u64 {
        self.state.balance(account)
    }
    pub fn tips(&self) -> &BTreeSet<Digest> {
        &self.tips
    }
    pub fn main_chain(&self) -> &[Digest] {
        &self.main
    }
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
    pub fn first_full_height(&self) -> u64 {
        self.first_full_height
    }
    /// Heights below this have no retained state deltas.
    pub fn delta_floor(&self) -> u64 {
        self.delta_floor
    }
    pub fn contains(&self, id: &Digest) -> bool {
        self.blocks.contains_key(id)
    }
    pub fn header(&self, id: &Digest) -> Option<&BlockHeader> {
        self.blocks.get(id).map(|b| &b.header)
    }
    pub fn seal(&self, id: &Digest) -> Option<&Signature> {
        self.blocks.get(id).map(|b| &b.seal)
    }
    /// The full block, if its body is still retained.
    pub fn block(&self, id: &Digest) -> Option<&Arc<Block>> {
        self.blocks.get(id).and_then(|b| b.block.as_ref())
    }
    pub fn all_block_ids(&self) -> impl Iterator<Item = &Digest> {
        self.blocks.keys()
    }
    pub fn next_schedule(&self, id: &Digest) -> Option<DifficultySchedule> {
        self.blocks.get(id).map(|b| b.next_schedule)
    }
    pub fn delta(&self, id: &Digest) -> Option<&StateDelta> {
        self.deltas.get(id)
    }

    pub fn is_on_main(&self, id: &Digest) -> bool {
        match self.blocks.get(id) {
            Some(b) => self.main.get(b.header.height as usize) == Some(id),
            None => false,
        }
    }

    /// Adopted-chain block at `height`.
    pub fn main_at(&self, height: u64) -> Option<Digest> {
        self.main.get(height as usize).copied()
    }

    /// Expected total balance at the adopted head.
    pub fn expected_supply(&self) -> u128 {
        self.genesis_state.total_balance()
            + self.params.block_reward as u128 * self.head_height() as u128
    }

    /// Reconstructs the state after block `id` from the head state and deltas.
    pub fn state_at(&self, id: &Digest) -> Result<LedgerState, Verdict> {
        if *id == self.head() {
            return Ok(self.state.clone());
        }
        let mut side = Vec::new();
        let mut cursor = *id;
        while !self.is_on_main(&cursor) {
            let stored = self.blocks.get(&cursor).ok_or(Verdict::UnknownParent)?;
            side.push(cursor);
            cursor = stored.header.predecessor;
        }
        let ancestor_height = self.blocks[&cursor].header.height;
        let mut state = self.state.clone();
        for main_id in self.main[ancestor_height as usize + 1..].iter().rev() {
            state.revert_delta(self.deltas.get(main_id).ok_or(Verdict::PrunedParent)?);
        }
        for side_id in side.iter().rev() {
            state.apply_delta(self.deltas.get(side_id).ok_or(Verdict::PrunedParent)?);
        }
        Ok(state)
    }

    pub fn validate_block(&self, block: &Block) -> Verdict {
        match self.check(block) {
            Ok(_) => Verdict::Accept,
            Err(v) => v,
        }
    }

    /// Full validation. Returns the state delta for a new valid block, or
    /// `None` when the block is already stored.
    fn check(&self, block: &Block) -> Result<Option<StateDelta>, Verdict> {
        if self.blocks.contains_key(&block.id()) {
            return Ok(None);
        }
        let header = &block.header;
        let parent = self
            .blocks
            .get(&header.predecessor)
            .ok_or(Verdict::UnknownParent)?;
        if header.height != parent.header.height + 1 {
            return Err(Verdict::BadHeight);
        }
        if !block.seal_valid(&self.keyring) || !self.consensus.accepts(parent, header) {
            return Err(Verdict::BadProof);
        }
        if block.total_weight() > self.params.capacity_units {
            return Err(Verdict::OverCapacity);
        }
        if block.computed_tx_root() != header.tx_root {
            return Err(Verdict::BadRoot(RootKind::Transactions));
        }
        if !block
            .transactions
            .iter()
            .all(|tx| tx.signature_valid(&self.keyring))
        {
            return Err(Verdict::BadSignature);
        }
        let mut state = self.state_at(&header.predecessor)?;
        let delta = state.apply_block(block, self.params.block_reward)?;
        if state.state_root() != header.state_root {
            return Err(Verdict::BadRoot(RootKind::State));
        }
        Ok(Some(delta))
    }

    /// Validates and adopts a block. Duplicates produce a no-op report.
    pub fn process(&mut self, block: Arc<Block>) -> Result<AdoptionReport, Verdict> {
        match self.check(&block)? {
            None => Ok(self.duplicate_report(block.id())),
            Some(delta) => Ok(self.insert(block, delta)),
        }
    }

    /// Adopts a block that is expected to be valid.
    pub fn adopt(&mut self, block: Arc<Block>) -> Result<AdoptionReport, ChainError> {
        let parent = block.header.predecessor;
        self.process(block).map_err(|v| match v {
            Verdict::UnknownParent => ChainError::OrphanParent(parent),
            other => ChainError::Invalid(other),
        })
    }

    fn duplicate_report(&self, id: Digest) -> AdoptionReport {
        AdoptionReport {
            block: id,
            head_before: self.head(),
            head_after: self.head(),
            duplicate: true,
            ..Default::default()
        }
    }

    fn schedule_after(&self, header: &BlockHeader) -> DifficultySchedule {
        let parent = &self.blocks[&header.predecessor];
        let current = parent.next_schedule;
        if !current.is_retarget_height(header.height) {
            return current;
        }
        let mut cursor = header.predecessor;
        for _ in 1..current.retarget_window {
            cursor = self.blocks[&cursor].header.predecessor;
        }
        let start = self.blocks[&cursor].header.timestamp_us;
        let observed_us = header.timestamp_us.saturating_sub(start).max(1);
        retarget(&current, observed_us as f64 / 1e6)
    }

    fn insert(&mut self, block: Arc<Block>, delta: StateDelta) -> AdoptionReport {
        let id = block.id();
        let header = block.header;
        let next_schedule = self.schedule_after(&header);
        for tx in &block.transactions {
            match self.tx_index.entry(tx.id()) {
                Entry::Occupied(mut homes) => homes.get_mut().more.push(id),
                Entry::Vacant(slot) => {
                    slot.insert(TxHomes {
                        first: id,
                        more: Vec::new(),
                    });
                }
            }
        }
        self.blocks.insert(
            id,
            StoredBlock {
                header,
                seal: block.seal,
                block: Some(block),
                next_schedule,
            },
        );
        self.deltas.insert(id, delta);
        self.tips.remove(&header.predecessor);
        self.tips.insert(id);

        let head_before = self.head();
        let mut report = AdoptionReport {
            block: id,
            head_before,
            head_after: head_before,
            ..Default::default()
        };
        if header.height <= self.head_height() {
            return report;
        }
        if header.predecessor == head_before {
            self.state.apply_delta(&self.deltas[&id]);
            self.main.push(id);
            report.adopted = vec![id];
            report.head_after = id;
            return report;
        }
        self.reorganize(id, &mut report);
        report
    }

    fn reorganize(&mut self, new_tip: Digest, report: &mut AdoptionReport) {
        let mut new_branch = Vec::new();
        let mut cursor = new_tip;
        while !self.is_on_main(&cursor) {
            new_branch.push(cursor);
            cursor = self.blocks[&cursor].header.predecessor;
        }
        new_branch.reverse();
        let ancestor_height = self.blocks[&cursor].header.height as usize;
        let old_branch: Vec<Digest> = self.main.split_off(ancestor_height + 1);

        for old in old_branch.iter().rev() {
            self.state.revert_delta(&self.deltas[old]);
        }
        for new in &new_branch {
            self.state.apply_delta(&self.deltas[new]);
        }
        self.main.extend(new_branch.iter().copied());

        let kept: HashSet<Digest> = new_branch
            .iter()
            .filter_map(|b| self.block(b))
            .flat_map(|b| b.transactions.iter().map(ChainTransaction::id))
            .collect();
        report.reorged_out = old_branch
            .iter()
            .filter_map(|b| self.block(b))
            .flat_map(|b| b.transactions.iter())
            .filter(|tx| !kept.contains(&tx.id()))
            .cloned()
            .collect();
        report.orphaned = old_branch;
        report.adopted = new_branch;
        report.head_after = new_tip;
    }

    /// `1 + head height − containing height` for a transaction on the adopted chain.
    pub fn confirmations(&self, tx: &Digest) -> Result<u64, ConfirmationError> {
        let homes = self.tx_index.get(tx).ok_or(ConfirmationError::NotFound)?;
        std::iter::once(&homes.first)
            .chain(&homes.more)
            .find(|b| self.is_on_main(b))
            .map(|b| 1 + self.head_height() - self.blocks[b].header.height)
            .ok_or(ConfirmationError::NotOnAdoptedChain)
    }

    pub fn is_confirmed(&self, tx: &Digest, threshold: u64) -> bool {
        self.confirmations(tx).is_ok_and(|c| c >= threshold)
    }

    /// Confirmation depth of a block on the adopted chain.
    pub fn block_confirmations(&self, id: &Digest) -> Option<u64> {
        if self.is_on_main(id) {
            Some(1 + self.head_height() - self.blocks[id].header.height)
        } else {
            None
        }
    }

    /// Drops bodies and deltas more than `keep_recent` blocks below the head.
    pub fn prune(&mut self, keep_recent: u64) -> Result<PruneReport, ChainError> {
        if keep_recent < self.params.prune_safety_window {
            return Err(ChainError::Config(format!(
                "chain.prune_keep_recent {keep_recent} is below the reorg safety window {}",
                self.params.prune_safety_window
            )));
        }
        let bytes_before = self.ledger_bytes().total();
        let head_height = self.head_height();
        let mut report = PruneReport {
            bytes_before,
            bytes_after: bytes_before,
            bodies_dropped: 0,
            deltas_dropped: 0,
            first_full_height: self.first_full_height,
        };
        if keep_recent >= head_height {
            return Ok(report);
        }
        let cutoff = head_height - keep_recent;
        let doomed: Vec<Digest> = self
            .blocks
            .iter()
            .filter(|(_, b)| b.header.height < cutoff)
            .map(|(id, _)| *id)
            .collect();
        for id in doomed {
            let stored = self.blocks.get_mut(&id).expect("listed above");
            if let Some(block) = stored.block.take() {
                for tx in &block.transactions {
                    if let Some(homes) = self.tx_index.get_mut(&tx.id()) {
                        homes.more.retain(|b| *b != id);
                        if homes.first == id {
                            match homes.more.pop() {
                                Some(other) => homes.first = other,
                                None => {
                                    self.tx_index.remove(&tx.id());
                                }
                            }
                        }
                    }
                }
                report.bodies_dropped += 1;
            }
            if self.deltas.remove(&id).is_some() {
                report.deltas_dropped += 1;
            }
        }
        self.first_full_height = self.first_full_height.max(cutoff);
        self.delta_floor = self.delta_floor.max(cutoff);
        report.first_full_height = self.first_full_height;
        report.bytes_after = self.ledger_bytes().total();
        Ok(report)
    }

    /// Test hook: credits funds to the head state with no backing block,
    /// breaking conservation.
    pub fn inject_unbacked_credit(&mut self, account: AccountId, amount: u64) {
        self.state.credit_unbacked(account, amount);
    }

    pub fn ledger_bytes(&self) -> LedgerBytes {
        let mut bytes = LedgerBytes {
            headers: (self.blocks.len() * Block::header_bytes()) as u64,
            state: self.state.encoded_bytes() as u64,
            ..Default::default()
        };
        for stored in self.blocks.values() {
            if let Some(block) = &stored.block {
                bytes.bodies += Block::body_bytes(block.transactions.len()) as u64;
            }
        }
        bytes.deltas = self.deltas.values().map(|d| d.encoded_len() as u64).sum();
        bytes
    }

    /// Appends a header without its body; used by fast sync.
    pub(crate) fn install_header(&mut self, header: BlockHeader, seal: Signature) {
        let id = header.id();
        let next_schedule = self.schedule_after(&header);
        self.blocks.insert(
            id,
            StoredBlock {
                header,
                seal,
                block: None,
                next_schedule,
            },
        );
        self.tips.remove(&header.predecessor);
        self.tips.insert(id);
        self.main.push(id);
    }

    /// Sets the verified state at the current head and marks everything up
    /// to it as delta-pruned.
    pub(crate) fn finish_snapshot(&mut self, pivot_state: LedgerState) {
        let pivot_height = self.head_height();
        self.state = pivot_state;
        self.first_full_height = pivot_height + 1;
        self.delta_floor = pivot_height + 1;
    }

    pub(crate) fn proof_ok(&self, header: &BlockHeader, seal: &Signature) -> bool {
        let Some(parent) = self.blocks.get(&header.predecessor) else {
            return false;
        };
        self.keyring.verify(seal, header.producer, header.id())
            && self.consensus.accepts(parent, header)
    }
}
