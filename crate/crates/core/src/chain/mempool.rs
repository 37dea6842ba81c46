use std::collections::{BTreeMap, HashMap};

use super::block::{Block, BlockHeader, ChainTransaction};
use super::store::{ChainError, ChainStore};
use crate::primitives::{merkle_root, AccountId, Digest, Identity};

/// Pending transactions in arrival order.
///
/// A transaction keeps its original position if it leaves and later
/// re-enters the pool (for example after a reorg).
#[derive(Debug, Clone, Default)]
pub struct Mempool {
    entries: BTreeMap<u64, ChainTransaction>,
    positions: HashMap<Digest, u64>,
    next_position: u64,
}

impl Mempool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns false if the transaction is already pending.
    pub fn insert(&mut self, tx: ChainTransaction) -> bool {
        let position = match self.positions.get(&tx.id()) {
            Some(p) => *p,
            None => {
                let p = self.next_position;
                self.next_position += 1;
                self.positions.insert(tx.id(), p);
                p
            }
        };
        self.entries.insert(position, tx).is_none()
    }

    pub fn remove(&mut self, id: &Digest) -> Option<ChainTransaction> {
        let position = self.positions.get(id)?;
        self.entries.remove(position)
    }

    pub fn contains(&self, id: &Digest) -> bool {
        self.positions
            .get(id)
            .is_some_and(|p| self.entries.contains_key(p))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ChainTransaction> {
        self.entries.values()
    }

    /// Removes transactions that can never become valid against `store`'s
    /// head state (sequence already consumed).
    pub fn evict_stale(&mut self, store: &ChainStore) {
        let state = store.state();
        self.entries
            .retain(|_, tx| tx.sequence() >= state.next_sequence(tx.sender()));
    }
}

/// An assembled but unsealed block.
#[derive(Debug, Clone)]
pub struct BlockTemplate {
    pub header: BlockHeader,
    pub transactions: Vec<ChainTransaction>,
}

impl BlockTemplate {
    pub fn seal(self, producer: &Identity, nonce: u64) -> Block {
        let header = BlockHeader { nonce, ..self.header };
        let seal = producer.sign(header.id());
        Block::new(header, self.transactions, seal)
    }

    pub fn total_weight(&self) -> u64 {
        self.transactions.iter().map(ChainTransaction::weight).sum()
    }
}

/// Greedy in-order packing. A transaction that does not fit the remaining
/// capacity, or is not valid on top of the transactions already chosen, is
/// skipped and later ones are still considered.
pub fn assemble_block(
    mempool: &Mempool,
    store: &ChainStore,
    parent: Digest,
    capacity: u64,
    producer: AccountId,
    timestamp_us: u64,
) -> Result<BlockTemplate, ChainError> {
    assemble_from(mempool.iter(), store, parent, capacity, producer, timestamp_us)
}

/// Same selection rule as [`assemble_block`] over any ordered candidate list.
pub fn assemble_from<'a>(
    candidates: impl IntoIterator<Item = &'a ChainTransaction>,
    store: &ChainStore,
    parent: Digest,
    capacity: u64,
    producer: AccountId,
    timestamp_us: u64,
) -> Result<BlockTemplate, ChainError> {
    let parent_header = *store.header(&parent).ok_or(ChainError::OrphanParent(parent))?;
    let mut state = store
        .state_at(&parent)
        .map_err(|_| ChainError::OrphanParent(parent))?;
    let mut remaining = capacity;
    let mut chosen = Vec::new();
    let mut pending: HashMap<AccountId, (u64, u64)> = HashMap::new();
    for tx in candidates {
        if tx.weight() > remaining {
            continue;
        }
        let sender = tx.sender();
        let (balance, next_seq) = *pending
            .entry(sender)
            .or_insert_with(|| (state.balance(sender), state.next_sequence(sender)));
        if tx.sequence() != next_seq || tx.amount() > balance {
            continue;
        }
        pending.insert(sender, (balance - tx.amount(), next_seq + 1));
        let recipient = tx.recipient();
        pending
            .entry(recipient)
            .or_insert_with(|| (state.balance(recipient), state.next_sequence(recipient)))
            .0 += tx.amount();
        remaining -= tx.weight();
        chosen.push(tx.clone());
        if remaining == 0 {
            break;
        }
    }

    let mut header = BlockHeader {
        predecessor: parent,
        tx_root: merkle_root(&chosen.iter().map(ChainTransaction::id).collect::<Vec<_>>()),
        state_root: Digest::ZERO,
        height: parent_header.height + 1,
        timestamp_us,
        nonce: 0,
        producer,
    };
    let draft = Block::new(header, chosen, Default::default());
    state
        .apply_block(&draft, store.params().block_reward)
        .expect("assembly only picks transactions valid in sequence");
    header.state_root = state.state_root();
    Ok(BlockTemplate {
        header,
        transactions: draft.transactions,
    })
}
