use std::collections::{BTreeMap, HashMap};

use super::block::{Block, Verdict};
use crate::primitives::{
    digest, merkle_root, AccountId, Decode, Digest, Encode, EncodingError, Reader,
    COUNT_WIDTH, DIGEST_WIDTH, DISCRIMINANT_WIDTH, U64_WIDTH,
};

/// Balance and next expected transaction sequence of one account.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AccountState {
    pub balance: u64,
    pub next_sequence: u64,
}

impl AccountState {
    pub const WIDTH: usize = 2 * U64_WIDTH;

    pub fn with_balance(balance: u64) -> Self {
        AccountState {
            balance,
            next_sequence: 0,
        }
    }
}

impl Encode for AccountState {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.balance.encode_to(out);
        self.next_sequence.encode_to(out);
    }
    fn encoded_len(&self) -> usize {
        Self::WIDTH
    }
}

impl Decode for AccountState {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        Ok(AccountState {
            balance: reader.u64()?,
            next_sequence: reader.u64()?,
        })
    }
}

/// Account-balance world state with a Merkle commitment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LedgerState {
    accounts: BTreeMap<AccountId, AccountState>,
}

impl LedgerState {
    pub fn from_balances(balances: impl IntoIterator<Item = (AccountId, u64)>) -> Self {
        LedgerState {
            accounts: balances
                .into_iter()
                .map(|(id, b)| (id, AccountState::with_balance(b)))
                .collect(),
        }
    }

    pub fn get(&self, account: AccountId) -> Option<&AccountState> {
        self.accounts.get(&account)
    }

    pub fn balance(&self, account: AccountId) -> u64 {
        self.accounts.get(&account).map_or(0, |a| a.balance)
    }

    pub fn next_sequence(&self, account: AccountId) -> u64 {
        self.accounts.get(&account).map_or(0, |a| a.next_sequence)
    }

    pub fn accounts(&self) -> &BTreeMap<AccountId, AccountState> {
        &self.accounts
    }

    pub fn total_balance(&self) -> u128 {
        self.accounts.values().map(|a| a.balance as u128).sum()
    }

    /// Merkle root over `H(account || balance || next_sequence)` in account order.
    pub fn state_root(&self) -> Digest {
        let leaves: Vec<Digest> = self
            .accounts
            .iter()
            .map(|(id, st)| {
                let mut buf = Vec::with_capacity(U64_WIDTH + AccountState::WIDTH);
                id.encode_to(&mut buf);
                st.encode_to(&mut buf);
                digest(&buf)
            })
            .collect();
        merkle_root(&leaves)
    }

    pub fn encoded_bytes(&self) -> usize {
        COUNT_WIDTH + self.accounts.len() * (U64_WIDTH + AccountState::WIDTH)
    }

    /// Applies every transaction and the producer reward, atomically.
    ///
    /// Signatures are not checked here. On error the state is unchanged.
    pub fn apply_block(&mut self, block: &Block, reward: u64) -> Result<StateDelta, Verdict> {
        let mut before: HashMap<AccountId, Option<AccountState>> = HashMap::new();
        let result = self.apply_inner(block, reward, &mut before);
        match result {
            Ok(()) => {
                let changes = before
                    .into_iter()
                    .map(|(id, prior)| {
                        let after = self.accounts[&id];
                        (id, AccountChange { before: prior, after })
                    })
                    .collect();
                Ok(StateDelta {
                    block: block.id(),
                    changes,
                })
            }
            Err(verdict) => {
                self.restore(before);
                Err(verdict)
            }
        }
    }

    fn apply_inner(
        &mut self,
        block: &Block,
        reward: u64,
        before: &mut HashMap<AccountId, Option<AccountState>>,
    ) -> Result<(), Verdict> {
        for tx in &block.transactions {
            let sender = tx.sender();
            before
                .entry(sender)
                .or_insert_with(|| self.accounts.get(&sender).copied());
            let st = self
                .accounts
                .get_mut(&sender)
                .ok_or(Verdict::DoubleSpend(sender))?;
            if tx.sequence() != st.next_sequence {
                return Err(Verdict::BadSequence(sender));
            }
            if tx.amount() > st.balance {
                return Err(Verdict::DoubleSpend(sender));
            }
            st.balance -= tx.amount();
            st.next_sequence += 1;
            self.credit(tx.recipient(), tx.amount(), before);
        }
        if reward > 0 {
            self.credit(block.header.producer, reward, before);
        }
        Ok(())
    }

    fn credit(
        &mut self,
        account: AccountId,
        amount: u64,
        before: &mut HashMap<AccountId, Option<AccountState>>,
    ) {
        before
            .entry(account)
            .or_insert_with(|| self.accounts.get(&account).copied());
        let st = self.accounts.entry(account).or_default();
        st.balance = st
            .balance
            .checked_add(amount)
            .expect("token supply overflow");
    }

    fn restore(&mut self, before: HashMap<AccountId, Option<AccountState>>) {
        for (id, prior) in before {
            match prior {
                Some(st) => {
                    self.accounts.insert(id, st);
                }
                None => {
                    self.accounts.remove(&id);
                }
            }
        }
    }

    pub(crate) fn credit_unbacked(&mut self, account: AccountId, amount: u64) {
        self.accounts.entry(account).or_default().balance += amount;
    }

    /// Moves the state forward across a block using its recorded delta.
    pub fn apply_delta(&mut self, delta: &StateDelta) {
        for (id, change) in &delta.changes {
            self.accounts.insert(*id, change.after);
        }
    }

    /// Moves the state back across a block using its recorded delta.
    pub fn revert_delta(&mut self, delta: &StateDelta) {
        for (id, change) in &delta.changes {
            match change.before {
                Some(st) => {
                    self.accounts.insert(*id, st);
                }
                None => {
                    self.accounts.remove(id);
                }
            }
        }
    }
}

/// One account's state before and after a block; `before` is `None` when the
/// block created the account.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccountChange {
    pub before: Option<AccountState>,
    pub after: AccountState,
}

/// Difference between a block's state and its predecessor's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateDelta {
    pub block: Digest,
    pub changes: BTreeMap<AccountId, AccountChange>,
}

impl StateDelta {
    const CHANGE_MAX: usize = U64_WIDTH + DISCRIMINANT_WIDTH + 2 * AccountState::WIDTH;
}

impl Encode for StateDelta {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.block.encode_to(out);
        out.extend_from_slice(&(self.changes.len() as u32).to_be_bytes());
        for (id, change) in &self.changes {
            id.encode_to(out);
            match change.before {
                None => out.push(0),
                Some(st) => {
                    out.push(1);
                    st.encode_to(out);
                }
            }
            change.after.encode_to(out);
        }
    }
    fn encoded_len(&self) -> usize {
        let absent = self.changes.values().filter(|c| c.before.is_none()).count();
        DIGEST_WIDTH + COUNT_WIDTH + self.changes.len() * Self::CHANGE_MAX
            - absent * AccountState::WIDTH
    }
}

impl Decode for StateDelta {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        let block = Digest::decode_from(reader)?;
        let count = reader.u32()?;
        let mut changes = BTreeMap::new();
        for _ in 0..count {
            let id = AccountId::decode_from(reader)?;
            let before = match reader.u8()? {
                0 => None,
                1 => Some(AccountState::decode_from(reader)?),
                value => {
                    return Err(EncodingError::BadDiscriminant {
                        kind: "optional account state",
                        value,
                    })
                }
            };
            let after = AccountState::decode_from(reader)?;
            changes.insert(id, AccountChange { before, after });
        }
        Ok(StateDelta { block, changes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::block::{BlockHeader, ChainTransaction};
    use crate::primitives::{decode, Identity};

    fn block_with(txs: Vec<ChainTransaction>, producer: AccountId) -> Block {
        let header = BlockHeader {
            predecessor: Digest::ZERO,
            tx_root: Digest::ZERO,
            state_root: Digest::ZERO,
            height: 1,
            timestamp_us: 0,
            nonce: 0,
            producer,
        };
        Block::new(header, txs, Identity::derive(0, producer).sign(header.id()))
    }

    #[test]
    fn overspend_is_double_spend_and_atomic() {
        let alice = Identity::derive(0, AccountId(1));
        let mut state = LedgerState::from_balances([(AccountId(1), 10)]);
        let root = state.state_root();
        let block = block_with(
            vec![ChainTransaction::signed(&alice, AccountId(2), 11, 0, 1)],
            AccountId(9),
        );
        assert_eq!(state.apply_block(&block, 5), Err(Verdict::DoubleSpend(AccountId(1))));
        assert_eq!(state.state_root(), root);
    }

    #[test]
    fn sequence_gap_rejected() {
        let alice = Identity::derive(0, AccountId(1));
        let mut state = LedgerState::from_balances([(AccountId(1), 10)]);
        let block = block_with(
            vec![ChainTransaction::signed(&alice, AccountId(2), 1, 1, 1)],
            AccountId(9),
        );
        assert_eq!(state.apply_block(&block, 0), Err(Verdict::BadSequence(AccountId(1))));
    }

    #[test]
    fn delta_round_trips_state() {
        let alice = Identity::derive(0, AccountId(1));
        let mut state = LedgerState::from_balances([(AccountId(1), 10)]);
        let original = state.clone();
        let block = block_with(
            vec![
                ChainTransaction::signed(&alice, AccountId(2), 4, 0, 1),
                ChainTransaction::signed(&alice, AccountId(3), 1, 1, 1),
            ],
            AccountId(9),
        );
        let delta = state.apply_block(&block, 50).unwrap();
        assert_eq!(state.balance(AccountId(1)), 5);
        assert_eq!(state.balance(AccountId(9)), 50);
        assert_eq!(state.total_balance(), 60);
        let applied = state.clone();
        state.revert_delta(&delta);
        assert_eq!(state, original);
        state.apply_delta(&delta);
        assert_eq!(state, applied);
        assert_eq!(delta.encode().len(), delta.encoded_len());
        assert_eq!(decode::<StateDelta>(&delta.encode()).unwrap(), delta);
    }
}
