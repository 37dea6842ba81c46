use std::fmt;

use crate::primitives::{
    digest, merkle_root, AccountId, Decode, Digest, Encode, EncodingError, Identity, Keyring,
    Reader, Signature, COUNT_WIDTH, DIGEST_WIDTH, U64_WIDTH,
};

/// A value transfer on the blockchain ledger.
///
/// The id (canonical digest of all fields including the signature) is
/// computed once at construction.
#[derive(Clone, PartialEq, Eq)]
pub struct ChainTransaction {
    sender: AccountId,
    recipient: AccountId,
    amount: u64,
    sequence: u64,
    weight: u64,
    signature: Signature,
    id: Digest,
}

impl ChainTransaction {
    pub const WIDTH: usize = 5 * U64_WIDTH + Signature::WIDTH;

    pub fn signed(
        sender: &Identity,
        recipient: AccountId,
        amount: u64,
        sequence: u64,
        weight: u64,
    ) -> Self {
        let payload = Self::payload_digest(sender.id(), recipient, amount, sequence, weight);
        Self::from_parts(sender.id(), recipient, amount, sequence, weight, sender.sign(payload))
    }

    /// Assembles a transaction from raw fields without checking the signature.
    pub fn from_parts(
        sender: AccountId,
        recipient: AccountId,
        amount: u64,
        sequence: u64,
        weight: u64,
        signature: Signature,
    ) -> Self {
        let mut tx = ChainTransaction {
            sender,
            recipient,
            amount,
            sequence,
            weight,
            signature,
            id: Digest::ZERO,
        };
        tx.id = digest(&tx.encode());
        tx
    }

    fn payload_digest(
        sender: AccountId,
        recipient: AccountId,
        amount: u64,
        sequence: u64,
        weight: u64,
    ) -> Digest {
        let mut buf = Vec::with_capacity(5 * U64_WIDTH);
        for v in [sender.0, recipient.0, amount, sequence, weight] {
            v.encode_to(&mut buf);
        }
        digest(&buf)
    }

    /// Digest of the canonical encoding without the signature field.
    pub fn signing_payload(&self) -> Digest {
        Self::payload_digest(self.sender, self.recipient, self.amount, self.sequence, self.weight)
    }

    pub fn signature_valid(&self, keyring: &Keyring) -> bool {
        keyring.verify(&self.signature, self.sender, self.signing_payload())
    }

    pub fn id(&self) -> Digest {
        self.id
    }
    pub fn sender(&self) -> AccountId {
        self.sender
    }
    pub fn recipient(&self) -> AccountId {
        self.recipient
    }
    pub fn amount(&self) -> u64 {
        self.amount
    }
    pub fn sequence(&self) -> u64 {
        self.sequence
    }
    pub fn weight(&self) -> u64 {
        self.weight
    }
    pub fn signature(&self) -> &Signature {
        &self.signature
    }
}

impl fmt::Debug for ChainTransaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Tx({:?} -> {:?}, {} @{}, w{})",
            self.sender, self.recipient, self.amount, self.sequence, self.weight
        )
    }
}

impl Encode for ChainTransaction {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.sender.encode_to(out);
        self.recipient.encode_to(out);
        self.amount.encode_to(out);
        self.sequence.encode_to(out);
        self.weight.encode_to(out);
        self.signature.encode_to(out);
    }
    fn encoded_len(&self) -> usize {
        Self::WIDTH
    }
}

impl Decode for ChainTransaction {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        let sender = AccountId::decode_from(reader)?;
        let recipient = AccountId::decode_from(reader)?;
        let amount = reader.u64()?;
        let sequence = reader.u64()?;
        let weight = reader.u64()?;
        let signature = Signature::decode_from(reader)?;
        Ok(Self::from_parts(sender, recipient, amount, sequence, weight, signature))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockHeader {
    /// Zero digest for the genesis block.
    pub predecessor: Digest,
    pub tx_root: Digest,
    pub state_root: Digest,
    pub height: u64,
    /// Simulation time in microseconds.
    pub timestamp_us: u64,
    /// Proof-of-work nonce, or the slot number under proof of stake.
    pub nonce: u64,
    pub producer: AccountId,
}

impl BlockHeader {
    pub const WIDTH: usize = 3 * DIGEST_WIDTH + 4 * U64_WIDTH;

    pub fn id(&self) -> Digest {
        digest(&self.encode())
    }

    /// Digest of the header with the nonce zeroed; the puzzle input.
    pub fn work_payload(&self) -> Digest {
        BlockHeader { nonce: 0, ..*self }.id()
    }

    pub fn is_genesis(&self) -> bool {
        self.predecessor.is_zero() && self.height == 0
    }
}

impl Encode for BlockHeader {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.predecessor.encode_to(out);
        self.tx_root.encode_to(out);
        self.state_root.encode_to(out);
        self.height.encode_to(out);
        self.timestamp_us.encode_to(out);
        self.nonce.encode_to(out);
        self.producer.encode_to(out);
    }
    fn encoded_len(&self) -> usize {
        Self::WIDTH
    }
}

impl Decode for BlockHeader {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        Ok(BlockHeader {
            predecessor: Digest::decode_from(reader)?,
            tx_root: Digest::decode_from(reader)?,
            state_root: Digest::decode_from(reader)?,
            height: reader.u64()?,
            timestamp_us: reader.u64()?,
            nonce: reader.u64()?,
            producer: AccountId::decode_from(reader)?,
        })
    }
}

/// A sealed block: header, transactions, and the producer's signature over
/// the header id.
#[derive(Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<ChainTransaction>,
    pub seal: Signature,
    id: Digest,
}

impl Block {
    pub fn new(header: BlockHeader, transactions: Vec<ChainTransaction>, seal: Signature) -> Self {
        Block {
            id: header.id(),
            header,
            transactions,
            seal,
        }
    }

    pub fn id(&self) -> Digest {
        self.id
    }

    pub fn tx_ids(&self) -> Vec<Digest> {
        self.transactions.iter().map(ChainTransaction::id).collect()
    }

    pub fn computed_tx_root(&self) -> Digest {
        merkle_root(&self.tx_ids())
    }

    pub fn total_weight(&self) -> u64 {
        self.transactions.iter().map(|t| t.weight).sum()
    }

    pub fn seal_valid(&self, keyring: &Keyring) -> bool {
        keyring.verify(&self.seal, self.header.producer, self.id)
    }

    pub fn header_bytes() -> usize {
        BlockHeader::WIDTH + Signature::WIDTH
    }

    pub fn body_bytes(tx_count: usize) -> usize {
        COUNT_WIDTH + tx_count * ChainTransaction::WIDTH
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Block(h{} {:?} by {:?}, {} txs)",
            self.header.height,
            self.id,
            self.header.producer,
            self.transactions.len()
        )
    }
}

impl Encode for Block {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.header.encode_to(out);
        self.transactions.encode_to(out);
        self.seal.encode_to(out);
    }
    fn encoded_len(&self) -> usize {
        Self::header_bytes() + Self::body_bytes(self.transactions.len())
    }
}

impl Decode for Block {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        let header = BlockHeader::decode_from(reader)?;
        let transactions = Vec::<ChainTransaction>::decode_from(reader)?;
        let seal = Signature::decode_from(reader)?;
        Ok(Block::new(header, transactions, seal))
    }
}

/// Which commitment failed to match.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootKind {
    Transactions,
    State,
}

/// Outcome of block validation. Rejections name the first rule that failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    BadProof,
    UnknownParent,
    /// The parent is known but its state deltas were pruned away.
    PrunedParent,
    BadHeight,
    OverCapacity,
    BadRoot(RootKind),
    BadSignature,
    DoubleSpend(AccountId),
    BadSequence(AccountId),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    /// Faults that prove the producer sealed an invalid block, as opposed to
    /// the local node lacking context to judge it.
    pub fn is_misbehaviour(&self) -> bool {
        matches!(
            self,
            Verdict::BadHeight
                | Verdict::OverCapacity
                | Verdict::BadRoot(_)
                | Verdict::BadSignature
                | Verdict::DoubleSpend(_)
                | Verdict::BadSequence(_)
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::BadProof => "bad-proof",
            Verdict::UnknownParent => "unknown-parent",
            Verdict::PrunedParent => "pruned-parent",
            Verdict::BadHeight => "bad-height",
            Verdict::OverCapacity => "over-capacity",
            Verdict::BadRoot(_) => "bad-root",
            Verdict::BadSignature => "bad-signature",
            Verdict::DoubleSpend(_) => "double-spend",
            Verdict::BadSequence(_) => "bad-sequence",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::decode;

    #[test]
    fn transaction_width_matches_encoding() {
        let id = Identity::derive(1, AccountId(1));
        let tx = ChainTransaction::signed(&id, AccountId(2), 5, 0, 250);
        assert_eq!(tx.encode().len(), ChainTransaction::WIDTH);
        assert_eq!(ChainTransaction::WIDTH, 112);
        let back: ChainTransaction = decode(&tx.encode()).unwrap();
        assert_eq!(back, tx);
        assert_eq!(back.id(), tx.id());
    }

    #[test]
    fn tampered_amount_breaks_signature() {
        let ring = crate::primitives::Keyring::with_accounts(1, 3);
        let tx = ChainTransaction::signed(ring.get(AccountId(1)).unwrap(), AccountId(2), 5, 0, 1);
        assert!(tx.signature_valid(&ring));
        let forged = ChainTransaction::from_parts(
            tx.sender(),
            tx.recipient(),
            500,
            tx.sequence(),
            tx.weight(),
            *tx.signature(),
        );
        assert!(!forged.signature_valid(&ring));
    }

    #[test]
    fn block_encoded_len_is_exact() {
        let id = Identity::derive(1, AccountId(1));
        let txs = (0..3)
            .map(|s| ChainTransaction::signed(&id, AccountId(2), 1, s, 10))
            .collect::<Vec<_>>();
        let header = BlockHeader {
            predecessor: Digest::ZERO,
            tx_root: Digest::ZERO,
            state_root: Digest::ZERO,
            height: 1,
            timestamp_us: 5,
            nonce: 0,
            producer: AccountId(1),
        };
        let block = Block::new(header, txs, id.sign(header.id()));
        assert_eq!(block.encode().len(), block.encoded_len());
        assert_eq!(decode::<Block>(&block.encode()).unwrap(), block);
    }
}
