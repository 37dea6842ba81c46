use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::block::{account_root, LatticeAction, LatticeBlock};
use super::voting::{resolve_fork, ForkResolution, VoteRecord};
use crate::election::MiningError;
use crate::metrics::LedgerBytes;
use crate::primitives::{AccountId, Digest, Encode, Identity, Keyring, Signature, DIGEST_WIDTH, U64_WIDTH};

pub const DEFAULT_GAP_BUFFER: usize = 10_000;
pub const DEFAULT_QUORUM: f64 = 0.5;

/// Bytes kept per discarded block on a pruned node: its digest, account,
/// chain position, arrival time and successor link.
pub const PRUNED_INDEX_ENTRY_BYTES: usize = 2 * DIGEST_WIDTH + 3 * U64_WIDTH;
const PENDING_ENTRY_BYTES: usize = DIGEST_WIDTH + 3 * U64_WIDTH;
const RECEIVED_ENTRY_BYTES: usize = 2 * DIGEST_WIDTH;
const ACCOUNT_ENTRY_BYTES: usize = DIGEST_WIDTH + 4 * U64_WIDTH;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub spam_difficulty_bits: u32,
    pub quorum_fraction: f64,
    /// `None` disables cementing.
    pub cement_delay_us: Option<u64>,
    pub gap_buffer: usize,
}

impl Default for LatticeParams {
    fn default() -> Self {
        LatticeParams {
            spam_difficulty_bits: 0,
            quorum_fraction: DEFAULT_QUORUM,
            cement_delay_us: None,
            gap_buffer: DEFAULT_GAP_BUFFER,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeTier {
    Historical,
    Current,
    Light,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenesisAccount {
    pub account: AccountId,
    pub amount: u64,
    pub representative: AccountId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccountChain {
    pub account: AccountId,
    pub head: Digest,
    pub balance: u64,
    pub representative: AccountId,
    pub block_count: u64,
    pub cemented_count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PendingSend {
    pub send: Digest,
    pub sender: AccountId,
    pub recipient: AccountId,
    pub amount: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeVerdict {
    Accept,
    /// Already applied.
    Duplicate,
    BadSignature,
    BadPow,
    /// Another block already follows the same predecessor.
    ForkDetected { existing: Digest },
    /// Predecessor or matched send not seen yet.
    GapDetected { missing: Digest },
    InsufficientBalance,
    InvalidAmount,
    DuplicateReceive,
    UnmatchedReceive,
    /// Conflicts with a cemented block; rejected without a vote.
    CementedConflict,
    /// Predecessor belongs to another account.
    InvalidPredecessor,
    InvalidGenesis,
}

impl LatticeVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            LatticeVerdict::Accept => "accept",
            LatticeVerdict::Duplicate => "duplicate",
            LatticeVerdict::BadSignature => "bad-signature",
            LatticeVerdict::BadPow => "bad-pow",
            LatticeVerdict::ForkDetected { .. } => "fork-detected",
            LatticeVerdict::GapDetected { .. } => "gap-detected",
            LatticeVerdict::InsufficientBalance => "insufficient-balance",
            LatticeVerdict::InvalidAmount => "invalid-amount",
            LatticeVerdict::DuplicateReceive => "duplicate-receive",
            LatticeVerdict::UnmatchedReceive => "unmatched-receive",
            LatticeVerdict::CementedConflict => "cemented-conflict",
            LatticeVerdict::InvalidPredecessor => "invalid-predecessor",
            LatticeVerdict::InvalidGenesis => "invalid-genesis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("insufficient balance: have {balance}, need {amount}")]
    InsufficientBalance { balance: u64, amount: u64 },
    #[error("amount must be positive")]
    InvalidAmount,
    #[error("account {0} has no chain on this node")]
    UnknownAccount(AccountId),
    #[error("no pending send {0:?} for this account")]
    NotFound(Digest),
    #[error("send {0:?} was already received")]
    DuplicateReceive(Digest),
    #[error("stale predecessor: chain head moved")]
    StalePredecessor,
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error("cannot roll back a cemented block")]
    CementedRollback,
    #[error("cannot roll back block {0:?}: history was pruned")]
    PrunedRollback(Digest),
    #[error("operation not available on a {0:?} node")]
    WrongTier(NodeTier),
}

/// An open or settled conflict between blocks sharing a predecessor.
#[derive(Clone, Debug)]
pub struct Election {
    pub root: Digest,
    pub account: AccountId,
    pub candidates: BTreeMap<Digest, Arc<LatticeBlock>>,
    pub opened_at_us: u64,
    pub decided: Option<Digest>,
    pub decided_at_us: Option<u64>,
    pub permanent_tie: bool,
}

impl Election {
    pub fn is_open(&self) -> bool {
        self.decided.is_none()
    }

    pub fn candidate_ids(&self) -> Vec<Digest> {
        self.candidates.keys().copied().collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct ProcessOutcome {
    pub verdict: Option<LatticeVerdict>,
    /// The block itself (if accepted) and any parked blocks it released.
    pub applied: Vec<Arc<LatticeBlock>>,
    /// Root of the election this block opened or joined.
    pub fork_root: Option<Digest>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElectionOutcome {
    pub root: Digest,
    pub winner: Digest,
    /// Removed blocks, newest first.
    pub rolled_back: Vec<Arc<LatticeBlock>>,
    pub applied: Vec<Arc<LatticeBlock>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePruneReport {
    pub bytes_before: u64,
    pub bytes_after: u64,
    pub blocks_dropped: u64,
    pub skipped_accounts: Vec<AccountId>,
}

#[derive(Clone, Copy, Debug)]
struct IndexEntry {
    account: AccountId,
    position: u64,
    applied_at_us: u64,
}

#[derive(Clone, Debug)]
struct Retained {
    block: Arc<LatticeBlock>,
    rep_before: AccountId,
}

/// One node's view of the block-lattice.
#[derive(Clone, Debug)]
pub struct Lattice {
    params: LatticeParams,
    tier: NodeTier,
    keyring: Arc<Keyring>,
    supply: u128,
    accounts: BTreeMap<AccountId, AccountChain>,
    retained: HashMap<Digest, Retained>,
    index: HashMap<Digest, IndexEntry>,
    successors: HashMap<Digest, Digest>,
    pending: BTreeMap<Digest, PendingSend>,
    received: HashMap<Digest, Digest>,
    weights: BTreeMap<AccountId, u64>,
    parked: HashMap<Digest, Vec<Arc<LatticeBlock>>>,
    parked_order: VecDeque<(Digest, Digest)>,
    parked_count: usize,
    parked_evicted: u64,
    elections: BTreeMap<Digest, Election>,
    votes: HashMap<Digest, BTreeMap<AccountId, VoteRecord>>,
}

impl Lattice {
    pub fn new(
        genesis: &[GenesisAccount],
        params: LatticeParams,
        tier: NodeTier,
        keyring: Arc<Keyring>,
    ) -> Self {
        let mut lattice = Lattice {
            params,
            tier,
            keyring,
            supply: 0,
            accounts: BTreeMap::new(),
            retained: HashMap::new(),
            index: HashMap::new(),
            successors: HashMap::new(),
            pending: BTreeMap::new(),
            received: HashMap::new(),
            weights: BTreeMap::new(),
            parked: HashMap::new(),
            parked_order: VecDeque::new(),
            parked_count: 0,
            parked_evicted: 0,
            elections: BTreeMap::new(),
            votes: HashMap::new(),
        };
        for g in genesis {
            let action = LatticeAction::Genesis {
                amount: g.amount,
                representative: g.representative,
            };
            let block = match lattice.keyring.get(g.account) {
                Some(identity) => LatticeBlock::build(identity, Digest::ZERO, action, 0)
                    .expect("zero difficulty always solves")
                    .0,
                None => LatticeBlock::from_parts(g.account, Digest::ZERO, action, 0, Signature::default()),
            };
            let hash = block.hash();
            lattice.supply += g.amount as u128;
            lattice.accounts.insert(
                g.account,
                AccountChain {
                    account: g.account,
                    head: hash,
                    balance: g.amount,
                    representative: g.representative,
                    block_count: 1,
                    cemented_count: 1,
                },
            );
            *lattice.weights.entry(g.representative).or_default() += g.amount;
            lattice.index.insert(
                hash,
                IndexEntry {
                    account: g.account,
                    position: 1,
                    applied_at_us: 0,
                },
            );
            lattice.successors.insert(account_root(g.account), hash);
            lattice.retained.insert(
                hash,
                Retained {
                    block: Arc::new(block),
                    rep_before: g.representative,
                },
            );
        }
        lattice
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }
    pub fn tier(&self) -> NodeTier {
        self.tier
    }
    pub fn keyring(&self) -> &Arc<Keyring> {
        &self.keyring
    }
    pub fn supply(&self) -> u128 {
        self.supply
    }
    pub fn account(&self, account: AccountId) -> Option<&AccountChain> {
        self.accounts.get(&account)
    }
    pub fn accounts(&self) -> &BTreeMap<AccountId, AccountChain> {
        &self.accounts
    }
    pub fn balance(&self, account: AccountId) -> u64 {
        self.accounts.get(&account).map_or(0, |c| c.balance)
    }
    pub fn pending(&self) -> &BTreeMap<Digest, PendingSend> {
        &self.pending
    }
    pub fn pending_for(&self, recipient: AccountId) -> impl Iterator<Item = &PendingSend> {
        self.pending.values().filter(move |p| p.recipient == recipient)
    }
    /// True once the send has a matching receive.
    pub fn is_settled(&self, send: &Digest) -> bool {
        self.received.contains_key(send)
    }
    pub fn receive_of(&self, send: &Digest) -> Option<Digest> {
        self.received.get(send).copied()
    }
    pub fn block(&self, hash: &Digest) -> Option<&Arc<LatticeBlock>> {
        self.retained.get(hash).map(|r| &r.block)
    }
    /// Applied here, whether or not the body is still retained.
    pub fn knows(&self, hash: &Digest) -> bool {
        self.index.contains_key(hash)
    }
    pub fn is_cemented(&self, hash: &Digest) -> bool {
        self.index
            .get(hash)
            .is_some_and(|e| e.position <= self.accounts[&e.account].cemented_count)
    }
    pub fn successor(&self, root: &Digest) -> Option<Digest> {
        self.successors.get(root).copied()
    }
    pub fn elections(&self) -> &BTreeMap<Digest, Election> {
        &self.elections
    }
    pub fn election(&self, root: &Digest) -> Option<&Election> {
        self.elections.get(root)
    }
    pub fn parked_len(&self) -> usize {
        self.parked_count
    }
    pub fn parked_evicted(&self) -> u64 {
        self.parked_evicted
    }
    pub fn retained_block_count(&self) -> usize {
        self.retained.len()
    }
    pub fn applied_block_count(&self) -> usize {
        self.index.len()
    }

    /// Sum of current balances of the accounts delegating to `rep`.
    pub fn representative_weight(&self, rep: AccountId) -> u64 {
        self.weights.get(&rep).copied().unwrap_or(0)
    }

    pub fn weights(&self) -> &BTreeMap<AccountId, u64> {
        &self.weights
    }

    /// Representative weights recomputed by scanning every account.
    pub fn weights_by_scan(&self) -> BTreeMap<AccountId, u64> {
        let mut weights: BTreeMap<AccountId, u64> = BTreeMap::new();
        for chain in self.accounts.values() {
            *weights.entry(chain.representative).or_default() += chain.balance;
        }
        weights.retain(|_, w| *w > 0);
        weights
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    pub fn settled_balance_total(&self) -> u128 {
        self.accounts.values().map(|c| c.balance as u128).sum()
    }

    pub fn pending_total(&self) -> u128 {
        self.pending.values().map(|p| p.amount as u128).sum()
    }

    /// Settled balances plus pending sends equal the genesis supply.
    pub fn conservation_holds(&self) -> bool {
        self.settled_balance_total() + self.pending_total() == self.supply
    }

    fn head_of(&self, account: AccountId) -> Digest {
        self.accounts.get(&account).map_or(Digest::ZERO, |c| c.head)
    }

    pub fn create_send(
        &self,
        owner: &Identity,
        recipient: AccountId,
        amount: u64,
    ) -> Result<(LatticeBlock, u64), LatticeError> {
        if amount == 0 {
            return Err(LatticeError::InvalidAmount);
        }
        let chain = self
            .accounts
            .get(&owner.id())
            .ok_or(LatticeError::UnknownAccount(owner.id()))?;
        if amount > chain.balance {
            return Err(LatticeError::InsufficientBalance {
                balance: chain.balance,
                amount,
            });
        }
        let action = LatticeAction::Send { recipient, amount };
        Ok(LatticeBlock::build(owner, chain.head, action, self.params.spam_difficulty_bits)?)
    }

    pub fn create_receive(&self, owner: &Identity, send: Digest) -> Result<(LatticeBlock, u64), LatticeError> {
        let pending = match self.pending.get(&send) {
            Some(p) if p.recipient == owner.id() => *p,
            Some(_) => return Err(LatticeError::NotFound(send)),
            None if self.received.contains_key(&send) => {
                return Err(LatticeError::DuplicateReceive(send))
            }
            None => return Err(LatticeError::NotFound(send)),
        };
        let action = LatticeAction::Receive {
            source: send,
            amount: pending.amount,
        };
        Ok(LatticeBlock::build(
            owner,
            self.head_of(owner.id()),
            action,
            self.params.spam_difficulty_bits,
        )?)
    }

    pub fn create_change(&self, owner: &Identity, representative: AccountId) -> Result<(LatticeBlock, u64), LatticeError> {
        let action = LatticeAction::ChangeRepresentative { representative };
        Ok(LatticeBlock::build(
            owner,
            self.head_of(owner.id()),
            action,
            self.params.spam_difficulty_bits,
        )?)
    }

    /// Judges a block against the current local view without changing it.
    pub fn validate(&self, block: &LatticeBlock) -> LatticeVerdict {
        if matches!(block.action(), LatticeAction::Genesis { .. }) {
            return LatticeVerdict::InvalidGenesis;
        }
        if !block.signature_valid(&self.keyring) {
            return LatticeVerdict::BadSignature;
        }
        if !block.work_valid(self.params.spam_difficulty_bits) {
            return LatticeVerdict::BadPow;
        }
        if self.index.contains_key(&block.hash()) {
            return LatticeVerdict::Duplicate;
        }
        let account = block.account();
        let predecessor = block.predecessor();
        let balance = match self.accounts.get(&account) {
            Some(chain) if chain.head == predecessor => chain.balance,
            Some(chain) => {
                let position = if predecessor.is_zero() {
                    0
                } else {
                    match self.index.get(&predecessor) {
                        Some(e) if e.account == account => e.position,
                        Some(_) => return LatticeVerdict::InvalidPredecessor,
                        None => return LatticeVerdict::GapDetected { missing: predecessor },
                    }
                };
                if position < chain.cemented_count {
                    return LatticeVerdict::CementedConflict;
                }
                return LatticeVerdict::ForkDetected {
                    existing: self.successors.get(&block.root()).copied().unwrap_or(Digest::ZERO),
                };
            }
            None if predecessor.is_zero() => 0,
            None => {
                return match self.index.get(&predecessor) {
                    Some(_) => LatticeVerdict::InvalidPredecessor,
                    None => LatticeVerdict::GapDetected { missing: predecessor },
                }
            }
        };
        if let Some(winner) = self.elections.get(&block.root()).and_then(|e| e.decided) {
            if winner != block.hash() {
                return LatticeVerdict::ForkDetected { existing: winner };
            }
        }
        match *block.action() {
            LatticeAction::Send { amount, .. } => {
                if amount == 0 {
                    LatticeVerdict::InvalidAmount
                } else if amount > balance {
                    LatticeVerdict::InsufficientBalance
                } else {
                    LatticeVerdict::Accept
                }
            }
            LatticeAction::Receive { source, amount } => match self.pending.get(&source) {
                Some(p) if p.recipient == account && p.amount == amount => LatticeVerdict::Accept,
                Some(_) => LatticeVerdict::UnmatchedReceive,
                None if self.received.contains_key(&source) => LatticeVerdict::DuplicateReceive,
                None if self.index.contains_key(&source) => LatticeVerdict::UnmatchedReceive,
                None => LatticeVerdict::GapDetected { missing: source },
            },
            LatticeAction::ChangeRepresentative { .. } => LatticeVerdict::Accept,
            LatticeAction::Genesis { .. } => unreachable!("rejected above"),
        }
    }

    /// Validates and, depending on the verdict, applies, parks, or enters the
    /// block into an election.
    pub fn process(&mut self, block: Arc<LatticeBlock>, now_us: u64) -> ProcessOutcome {
        let mut outcome = ProcessOutcome::default();
        let verdict = self.validate(&block);
        outcome.verdict = Some(verdict);
        match verdict {
            LatticeVerdict::Accept => {
                let mut work = vec![block];
                while let Some(next) = work.pop() {
                    match self.validate(&next) {
                        LatticeVerdict::Accept => {}
                        // A released child can still lack its other dependency.
                        LatticeVerdict::GapDetected { missing } => {
                            self.park(next, missing);
                            continue;
                        }
                        _ => continue,
                    }
                    let hash = next.hash();
                    self.apply(next.clone(), now_us);
                    outcome.applied.push(next);
                    if let Some(children) = self.parked.remove(&hash) {
                        self.parked_count -= children.len();
                        work.extend(children.into_iter().rev());
                    }
                }
            }
            LatticeVerdict::GapDetected { missing } => self.park(block, missing),
            LatticeVerdict::ForkDetected { existing } => {
                outcome.fork_root = Some(self.enter_election(block, existing, now_us));
            }
            _ => {}
        }
        outcome
    }

    fn park(&mut self, block: Arc<LatticeBlock>, missing: Digest) {
        let waiting = self.parked.entry(missing).or_default();
        if waiting.iter().any(|b| b.hash() == block.hash()) {
            return;
        }
        self.parked_order.push_back((missing, block.hash()));
        waiting.push(block);
        self.parked_count += 1;
        while self.parked_count > self.params.gap_buffer {
            let Some((missing, hash)) = self.parked_order.pop_front() else {
                break;
            };
            if let Some(list) = self.parked.get_mut(&missing) {
                let before = list.len();
                list.retain(|b| b.hash() != hash);
                if list.len() < before {
                    self.parked_count -= 1;
                    self.parked_evicted += 1;
                }
                if list.is_empty() {
                    self.parked.remove(&missing);
                }
            }
        }
    }

    fn enter_election(&mut self, block: Arc<LatticeBlock>, existing: Digest, now_us: u64) -> Digest {
        let root = block.root();
        let existing_block = self.block(&existing).cloned();
        let election = self.elections.entry(root).or_insert_with(|| Election {
            root,
            account: block.account(),
            candidates: BTreeMap::new(),
            opened_at_us: now_us,
            decided: None,
            decided_at_us: None,
            permanent_tie: false,
        });
        if election.is_open() {
            if let Some(existing) = existing_block {
                election.candidates.entry(existing.hash()).or_insert(existing);
            }
            election.candidates.entry(block.hash()).or_insert(block);
        }
        root
    }

    fn apply(&mut self, block: Arc<LatticeBlock>, now_us: u64) {
        let hash = block.hash();
        let account = block.account();
        let root = block.root();
        let chain = self.accounts.entry(account).or_insert(AccountChain {
            account,
            head: Digest::ZERO,
            balance: 0,
            representative: account,
            block_count: 0,
            cemented_count: 0,
        });
        let rep_before = chain.representative;
        match *block.action() {
            LatticeAction::Send { recipient, amount } => {
                chain.balance -= amount;
                *self.weights.entry(rep_before).or_default() -= amount;
                self.pending.insert(
                    hash,
                    PendingSend {
                        send: hash,
                        sender: account,
                        recipient,
                        amount,
                    },
                );
            }
            LatticeAction::Receive { source, amount } => {
                self.pending.remove(&source);
                self.received.insert(source, hash);
                chain.balance += amount;
                *self.weights.entry(rep_before).or_default() += amount;
            }
            LatticeAction::ChangeRepresentative { representative } => {
                *self.weights.entry(rep_before).or_default() -= chain.balance;
                *self.weights.entry(representative).or_default() += chain.balance;
                chain.representative = representative;
            }
            LatticeAction::Genesis { .. } => unreachable!("genesis is never applied from the network"),
        }
        chain.head = hash;
        chain.block_count += 1;
        let position = chain.block_count;
        self.weights.retain(|_, w| *w > 0);
        self.index.insert(
            hash,
            IndexEntry {
                account,
                position,
                applied_at_us: now_us,
            },
        );
        self.successors.insert(root, hash);
        self.retained.insert(hash, Retained { block, rep_before });
    }

    /// Removes `target` and everything above it on its account chain,
    /// recursively undoing receives of any removed send.
    fn rollback_from(&mut self, target: Digest, removed: &mut Vec<Arc<LatticeBlock>>) -> Result<(), LatticeError> {
        let account = self.index.get(&target).ok_or(LatticeError::NotFound(target))?.account;
        loop {
            let chain = self.accounts[&account];
            let head = chain.head;
            let position = self.index[&head].position;
            if position <= chain.cemented_count {
                return Err(LatticeError::CementedRollback);
            }
            let retained = self
                .retained
                .get(&head)
                .cloned()
                .ok_or(LatticeError::PrunedRollback(head))?;
            let block = retained.block;
            match *block.action() {
                LatticeAction::Send { amount, .. } => {
                    if let Some(receive) = self.received.get(&head).copied() {
                        self.rollback_from(receive, removed)?;
                    }
                    self.pending.remove(&head);
                    let chain = self.accounts.get_mut(&account).expect("exists");
                    chain.balance += amount;
                    *self.weights.entry(chain.representative).or_default() += amount;
                }
                LatticeAction::Receive { source, amount } => {
                    let sender = self.index.get(&source).map_or(AccountId(0), |e| e.account);
                    self.received.remove(&source);
                    self.pending.insert(
                        source,
                        PendingSend {
                            send: source,
                            sender,
                            recipient: account,
                            amount,
                        },
                    );
                    let chain = self.accounts.get_mut(&account).expect("exists");
                    chain.balance -= amount;
                    *self.weights.entry(chain.representative).or_default() -= amount;
                }
                LatticeAction::ChangeRepresentative { representative } => {
                    let chain = self.accounts.get_mut(&account).expect("exists");
                    *self.weights.entry(representative).or_default() -= chain.balance;
                    *self.weights.entry(retained.rep_before).or_default() += chain.balance;
                    chain.representative = retained.rep_before;
                }
                LatticeAction::Genesis { .. } => return Err(LatticeError::CementedRollback),
            }
            self.weights.retain(|_, w| *w > 0);
            let chain = self.accounts.get_mut(&account).expect("exists");
            chain.head = block.predecessor();
            chain.block_count -= 1;
            if chain.block_count == 0 {
                self.accounts.remove(&account);
            }
            self.successors.remove(&block.root());
            self.index.remove(&head);
            self.retained.remove(&head);
            removed.push(block);
            if head == target {
                return Ok(());
            }
        }
    }

    /// Records a verified vote, keeping only the latest per representative
    /// and subject. Returns false for invalid or superseded votes.
    pub fn record_vote(&mut self, vote: VoteRecord) -> bool {
        if !vote.signature_valid(&self.keyring) {
            return false;
        }
        let slot = self.votes.entry(vote.subject).or_default();
        match slot.get(&vote.representative) {
            Some(prev) if prev.sequence >= vote.sequence => false,
            _ => {
                slot.insert(vote.representative, vote);
                true
            }
        }
    }

    pub fn votes_on(&self, subject: &Digest) -> Vec<VoteRecord> {
        self.votes
            .get(subject)
            .map(|m| m.values().copied().collect())
            .unwrap_or_default()
    }

    pub fn vote_of(&self, subject: &Digest, rep: AccountId) -> Option<&VoteRecord> {
        self.votes.get(subject).and_then(|m| m.get(&rep))
    }

    pub fn tally(&self, root: &Digest) -> Option<ForkResolution> {
        let election = self.elections.get(root)?;
        let candidates = election.candidate_ids();
        let votes = self.votes.get(root);
        Some(resolve_fork(
            *root,
            &candidates,
            votes.into_iter().flat_map(|m| m.values()),
            self.total_weight(),
            self.params.quorum_fraction,
        ))
    }

    /// Candidate with strictly the most vote weight so far, if any.
    pub fn leading_candidate(&self, root: &Digest) -> Option<Digest> {
        let election = self.elections.get(root)?;
        let mut tally: BTreeMap<Digest, u128> = BTreeMap::new();
        for vote in self.votes.get(root).into_iter().flat_map(|m| m.values()) {
            if election.candidates.contains_key(&vote.choice) {
                *tally.entry(vote.choice).or_default() += vote.weight as u128;
            }
        }
        let mut ranked: Vec<(Digest, u128)> = tally.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1));
        match ranked.as_slice() {
            [(d, _)] => Some(*d),
            [(d, w), (_, w2), ..] if w > w2 => Some(*d),
            _ => None,
        }
    }

    /// Decides an open election if the tally has a winner, replacing the
    /// locally applied successor when it lost.
    pub fn settle_election(&mut self, root: &Digest, now_us: u64) -> Result<Option<ElectionOutcome>, LatticeError> {
        let Some(resolution) = self.tally(root) else {
            return Ok(None);
        };
        let election = self.elections.get_mut(root).expect("tallied above");
        if !election.is_open() {
            return Ok(None);
        }
        let winner = match resolution {
            ForkResolution::Winner(w) => w,
            undecided => {
                election.permanent_tie = undecided.is_permanent_tie();
                return Ok(None);
            }
        };
        election.decided = Some(winner);
        election.decided_at_us = Some(now_us);
        let winner_block = election.candidates.get(&winner).cloned();
        election.candidates.retain(|d, _| *d == winner);

        let mut outcome = ElectionOutcome {
            root: *root,
            winner,
            rolled_back: Vec::new(),
            applied: Vec::new(),
        };
        if let Some(current) = self.successors.get(root).copied() {
            if current != winner {
                self.rollback_from(current, &mut outcome.rolled_back)?;
            }
        }
        if let Some(block) = winner_block {
            if !self.index.contains_key(&winner) {
                outcome.applied = self.process(block, now_us).applied;
            }
        }
        Ok(Some(outcome))
    }

    fn has_open_election(&self, root: &Digest) -> bool {
        self.elections.get(root).is_some_and(Election::is_open)
    }

    /// Marks `hash` and its uncemented ancestors irreversible once each has
    /// been applied for at least the cement delay with no open conflict.
    pub fn cement(&mut self, hash: &Digest, now_us: u64) -> bool {
        let Some(delay) = self.params.cement_delay_us else {
            return false;
        };
        let Some(entry) = self.index.get(hash).copied() else {
            return false;
        };
        let account = entry.account;
        loop {
            let chain = self.accounts[&account];
            if chain.cemented_count >= entry.position {
                return true;
            }
            let frontier = if chain.cemented_count == 0 {
                account_root(account)
            } else {
                self.block_at(account, chain.cemented_count)
            };
            let Some(next) = self.successors.get(&frontier).copied() else {
                return false;
            };
            let next_entry = self.index[&next];
            if now_us < next_entry.applied_at_us.saturating_add(delay) || self.has_open_election(&frontier) {
                return false;
            }
            self.accounts.get_mut(&account).expect("exists").cemented_count += 1;
        }
    }

    fn block_at(&self, account: AccountId, position: u64) -> Digest {
        let mut cursor = self.accounts[&account].head;
        loop {
            let entry = self.index[&cursor];
            if entry.position == position {
                return cursor;
            }
            cursor = match self.retained.get(&cursor) {
                Some(r) => r.block.predecessor(),
                None => self.predecessor_of(&cursor),
            };
        }
    }

    fn predecessor_of(&self, hash: &Digest) -> Digest {
        self.successors
            .iter()
            .find(|(_, s)| *s == hash)
            .map(|(p, _)| *p)
            .expect("applied block has a predecessor link")
    }

    /// Cements every account head as far as the rules allow.
    pub fn cement_all(&mut self, now_us: u64) -> usize {
        if self.params.cement_delay_us.is_none() {
            return 0;
        }
        let heads: Vec<(AccountId, Digest, u64)> = self
            .accounts
            .values()
            .map(|c| (c.account, c.head, c.cemented_count))
            .collect();
        let mut newly = 0;
        for (account, head, before) in heads {
            self.cement(&head, now_us);
            newly += (self.accounts[&account].cemented_count - before) as usize;
        }
        newly
    }

    /// Reduces every undisputed account chain to its head block.
    pub fn prune(&mut self) -> Result<LatticePruneReport, LatticeError> {
        if self.tier == NodeTier::Light {
            return Err(LatticeError::WrongTier(self.tier));
        }
        let bytes_before = self.ledger_bytes().total();
        let disputed: std::collections::BTreeSet<AccountId> = self
            .elections
            .values()
            .filter(|e| e.is_open())
            .map(|e| e.account)
            .collect();
        let mut dropped = 0;
        let heads: Vec<(AccountId, Digest)> = self.accounts.values().map(|c| (c.account, c.head)).collect();
        for (account, head) in heads {
            if disputed.contains(&account) {
                continue;
            }
            let mut cursor = match self.retained.get(&head) {
                Some(r) => r.block.predecessor(),
                None => continue,
            };
            while let Some(r) = self.retained.remove(&cursor) {
                dropped += 1;
                cursor = r.block.predecessor();
            }
        }
        self.tier = NodeTier::Current;
        Ok(LatticePruneReport {
            bytes_before,
            bytes_after: self.ledger_bytes().total(),
            blocks_dropped: dropped,
            skipped_accounts: disputed.into_iter().collect(),
        })
    }

    /// Test hook: credits funds with no backing block, breaking conservation.
    pub fn inject_unbacked_credit(&mut self, account: AccountId, amount: u64) {
        if let Some(chain) = self.accounts.get_mut(&account) {
            chain.balance += amount;
            *self.weights.entry(chain.representative).or_default() += amount;
        }
    }

    pub fn ledger_bytes(&self) -> LedgerBytes {
        let block_bytes: usize = self.retained.values().map(|r| r.block.encoded_len()).sum();
        let pruned_entries = self.index.len() - self.retained.len();
        LedgerBytes {
            lattice_blocks: (block_bytes + pruned_entries * PRUNED_INDEX_ENTRY_BYTES) as u64,
            pending: (self.pending.len() * PENDING_ENTRY_BYTES
                + self.received.len() * RECEIVED_ENTRY_BYTES) as u64,
            state: (self.accounts.len() * ACCOUNT_ENTRY_BYTES) as u64,
            ..Default::default()
        }
    }
}
