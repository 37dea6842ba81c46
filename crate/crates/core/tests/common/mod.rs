//! Ledger fixtures shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::sync::Arc;

use ledgerlab::chain::{assemble_from, Block, BlockTemplate, ChainParams, ChainStore, ChainTransaction, Consensus};
use ledgerlab::lattice::{GenesisAccount, Lattice, LatticeBlock, LatticeParams, NodeTier};
use ledgerlab::primitives::{merkle_root, AccountId, Identity, Keyring};

pub const CHAIN_USERS: u64 = 20;
pub const USER_BALANCE: u64 = 1_000_000;
pub const TX_WEIGHT: u64 = 400;
/// Account id of the fixture block producer.
pub const PRODUCER: AccountId = AccountId(CHAIN_USERS);

pub struct ChainFixture {
    pub store: ChainStore,
    pub keyring: Arc<Keyring>,
    pub seed: u64,
}

impl ChainFixture {
    pub fn new(seed: u64) -> Self {
        let keyring = Arc::new(Keyring::with_accounts(seed, CHAIN_USERS + 1));
        let store = ChainStore::new(
            (0..CHAIN_USERS).map(|u| (AccountId(u), USER_BALANCE)),
            ChainParams::default(),
            Consensus::Open,
            keyring.clone(),
        );
        ChainFixture { store, keyring, seed }
    }

    pub fn identity(&self, id: AccountId) -> &Identity {
        self.keyring.get(id).expect("fixture identity")
    }

    /// Transfers between distinct senders that are valid on `parent`.
    pub fn transfers(&self, parent: &ledgerlab::primitives::Digest, count: u64, salt: u64) -> Vec<ChainTransaction> {
        let state = self.store.state_at(parent).expect("parent state");
        (0..count.min(CHAIN_USERS))
            .map(|i| {
                let sender = AccountId((salt * 7 + i) % CHAIN_USERS);
                let recipient = AccountId((sender.0 + 1 + salt % (CHAIN_USERS - 1)) % CHAIN_USERS);
                let amount = 1 + (salt + i) % 97;
                ChainTransaction::signed(
                    self.identity(sender),
                    recipient,
                    amount.min(state.balance(sender).max(1)),
                    state.next_sequence(sender),
                    TX_WEIGHT,
                )
            })
            .collect()
    }

    pub fn template_on(&self, parent: ledgerlab::primitives::Digest, txs: &[ChainTransaction]) -> BlockTemplate {
        let height = self.store.header(&parent).expect("parent").height + 1;
        assemble_from(
            txs,
            &self.store,
            parent,
            self.store.params().capacity_units,
            PRODUCER,
            height * 600_000_000,
        )
        .expect("parent known")
    }

    pub fn block_on(&self, parent: ledgerlab::primitives::Digest, txs_per_block: u64, salt: u64) -> Block {
        let txs = self.transfers(&parent, txs_per_block, salt);
        self.template_on(parent, &txs).seal(self.identity(PRODUCER), salt)
    }

    /// Appends `count` blocks on the head, each carrying `txs_per_block` transfers.
    pub fn extend(&mut self, count: u64, txs_per_block: u64) {
        for _ in 0..count {
            let height = self.store.head_height() + 1;
            let block = self.block_on(self.store.head(), txs_per_block, height);
            self.store.process(Arc::new(block)).expect("fixture block is valid");
        }
    }

    /// A head extension whose extra transaction spends more than the sender holds.
    pub fn overspend_block(&self, salt: u64) -> Block {
        self.overspend_block_by(salt, PRODUCER)
    }

    pub fn overspend_block_by(&self, salt: u64, producer: AccountId) -> Block {
        let parent = self.store.head();
        let mut template = self.template_on(parent, &self.transfers(&parent, 3, salt));
        let sender = AccountId(CHAIN_USERS - 1);
        let state = self.store.state();
        let tx = ChainTransaction::signed(
            self.identity(sender),
            AccountId(0),
            state.balance(sender) + 1,
            state.next_sequence(sender),
            TX_WEIGHT,
        );
        template.transactions.retain(|t| t.sender() != sender);
        template.transactions.push(tx);
        template.header.tx_root = merkle_root(&template.transactions.iter().map(ChainTransaction::id).collect::<Vec<_>>());
        template.header.producer = producer;
        template.seal(self.identity(producer), salt)
    }
}

pub fn chain_of(seed: u64, length: u64, txs_per_block: u64) -> ChainFixture {
    let mut fixture = ChainFixture::new(seed);
    fixture.extend(length, txs_per_block);
    fixture
}

pub struct LatticeFixture {
    pub lattice: Lattice,
    pub keyring: Arc<Keyring>,
    pub accounts: u64,
    pub now_us: u64,
}

impl LatticeFixture {
    /// `accounts` users delegating round robin to `reps` representatives,
    /// which are the first `reps` accounts.
    pub fn new(seed: u64, accounts: u64, reps: u64, balance: u64) -> Self {
        let keyring = Arc::new(Keyring::with_accounts(seed, accounts));
        let genesis: Vec<GenesisAccount> = (0..accounts)
            .map(|a| GenesisAccount {
                account: AccountId(a),
                amount: balance,
                representative: AccountId(a % reps),
            })
            .collect();
        let lattice = Lattice::new(&genesis, LatticeParams::default(), NodeTier::Historical, keyring.clone());
        LatticeFixture {
            lattice,
            keyring,
            accounts,
            now_us: 0,
        }
    }

    pub fn identity(&self, id: AccountId) -> &Identity {
        self.keyring.get(id).expect("fixture identity")
    }

    pub fn apply(&mut self, block: LatticeBlock) {
        self.now_us += 1_000;
        let outcome = self.lattice.process(Arc::new(block), self.now_us);
        assert!(outcome.verdict.is_some_and(|v| v.label() == "accept"), "{:?}", outcome.verdict);
    }

    /// One send from `from` to `to`, received immediately.
    pub fn transfer(&mut self, from: u64, to: u64, amount: u64) {
        let (send, _) = self
            .lattice
            .create_send(self.identity(AccountId(from)), AccountId(to), amount)
            .expect("funded send");
        let hash = send.hash();
        self.apply(send);
        let (receive, _) = self
            .lattice
            .create_receive(self.identity(AccountId(to)), hash)
            .expect("pending send");
        self.apply(receive);
    }

    /// `rounds` passes of transfers around the ring of accounts.
    pub fn churn(&mut self, rounds: u64) {
        for r in 0..rounds {
            for a in 0..self.accounts {
                let to = (a + 1 + r % (self.accounts - 1)) % self.accounts;
                self.transfer(a, to, 1 + (a + r) % 13);
            }
        }
    }
}
