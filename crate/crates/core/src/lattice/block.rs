use std::fmt;

use crate::election::{antispam_pow, check_pow, MiningError};
use crate::primitives::{
    digest, digest_parts, AccountId, Decode, Digest, Encode, EncodingError, Identity, Keyring,
    Reader, Signature, DIGEST_WIDTH, DISCRIMINANT_WIDTH, U64_WIDTH,
};

/// The single action a lattice block performs on its account.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeAction {
    Genesis { amount: u64, representative: AccountId },
    Send { recipient: AccountId, amount: u64 },
    /// Claims a pending send, identified by the send block's hash.
    Receive { source: Digest, amount: u64 },
    ChangeRepresentative { representative: AccountId },
}

impl LatticeAction {
    fn discriminant(&self) -> u8 {
        match self {
            LatticeAction::Genesis { .. } => 0,
            LatticeAction::Send { .. } => 1,
            LatticeAction::Receive { .. } => 2,
            LatticeAction::ChangeRepresentative { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LatticeAction::Genesis { .. } => "genesis",
            LatticeAction::Send { .. } => "send",
            LatticeAction::Receive { .. } => "receive",
            LatticeAction::ChangeRepresentative { .. } => "change",
        }
    }
}

impl Encode for LatticeAction {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.push(self.discriminant());
        match self {
            LatticeAction::Genesis {
                amount,
                representative,
            } => {
                amount.encode_to(out);
                representative.encode_to(out);
            }
            LatticeAction::Send { recipient, amount } => {
                recipient.encode_to(out);
                amount.encode_to(out);
            }
            LatticeAction::Receive { source, amount } => {
                source.encode_to(out);
                amount.encode_to(out);
            }
            LatticeAction::ChangeRepresentative { representative } => {
                representative.encode_to(out);
            }
        }
    }

    fn encoded_len(&self) -> usize {
        DISCRIMINANT_WIDTH
            + match self {
                LatticeAction::Genesis { .. } | LatticeAction::Send { .. } => 2 * U64_WIDTH,
                LatticeAction::Receive { .. } => DIGEST_WIDTH + U64_WIDTH,
                LatticeAction::ChangeRepresentative { .. } => U64_WIDTH,
            }
    }
}

impl Decode for LatticeAction {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        Ok(match reader.u8()? {
            0 => LatticeAction::Genesis {
                amount: reader.u64()?,
                representative: AccountId::decode_from(reader)?,
            },
            1 => LatticeAction::Send {
                recipient: AccountId::decode_from(reader)?,
                amount: reader.u64()?,
            },
            2 => LatticeAction::Receive {
                source: Digest::decode_from(reader)?,
                amount: reader.u64()?,
            },
            3 => LatticeAction::ChangeRepresentative {
                representative: AccountId::decode_from(reader)?,
            },
            value => {
                return Err(EncodingError::BadDiscriminant {
                    kind: "lattice action",
                    value,
                })
            }
        })
    }
}

/// One node of an account chain. The hash covers account, predecessor and
/// action; the anti-spam work and the signature are both bound to it.
#[derive(Clone, PartialEq, Eq)]
pub struct LatticeBlock {
    account: AccountId,
    predecessor: Digest,
    action: LatticeAction,
    work: u64,
    signature: Signature,
    hash: Digest,
}

impl LatticeBlock {
    /// Builds, mines and signs a block.
    pub fn build(
        owner: &Identity,
        predecessor: Digest,
        action: LatticeAction,
        spam_difficulty_bits: u32,
    ) -> Result<(LatticeBlock, u64), MiningError> {
        let hash = Self::content_hash(owner.id(), predecessor, &action);
        let solution = antispam_pow(&hash, spam_difficulty_bits)?;
        let block = LatticeBlock {
            account: owner.id(),
            predecessor,
            action,
            work: solution.nonce,
            signature: owner.sign(hash),
            hash,
        };
        Ok((block, solution.attempts))
    }

    pub fn from_parts(
        account: AccountId,
        predecessor: Digest,
        action: LatticeAction,
        work: u64,
        signature: Signature,
    ) -> Self {
        LatticeBlock {
            hash: Self::content_hash(account, predecessor, &action),
            account,
            predecessor,
            action,
            work,
            signature,
        }
    }

    fn content_hash(account: AccountId, predecessor: Digest, action: &LatticeAction) -> Digest {
        let mut buf = Vec::with_capacity(U64_WIDTH + DIGEST_WIDTH + action.encoded_len());
        account.encode_to(&mut buf);
        predecessor.encode_to(&mut buf);
        action.encode_to(&mut buf);
        digest(&buf)
    }

    pub fn hash(&self) -> Digest {
        self.hash
    }
    pub fn account(&self) -> AccountId {
        self.account
    }
    pub fn predecessor(&self) -> Digest {
        self.predecessor
    }
    pub fn action(&self) -> &LatticeAction {
        &self.action
    }
    pub fn work(&self) -> u64 {
        self.work
    }
    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// The election subject for conflicts on this block's position: its
    /// predecessor, or a per-account constant for an account's first block.
    pub fn root(&self) -> Digest {
        if self.predecessor.is_zero() {
            account_root(self.account)
        } else {
            self.predecessor
        }
    }

    pub fn signature_valid(&self, keyring: &Keyring) -> bool {
        keyring.verify(&self.signature, self.account, self.hash)
    }

    pub fn work_valid(&self, spam_difficulty_bits: u32) -> bool {
        check_pow(&self.hash, self.work, spam_difficulty_bits)
    }
}

pub fn account_root(account: AccountId) -> Digest {
    digest_parts(&[b"ledgerlab/account-root", &account.0.to_be_bytes()])
}

impl fmt::Debug for LatticeBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticeBlock({:?} {:?} {:?})", self.account, self.hash, self.action)
    }
}

impl Encode for LatticeBlock {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.account.encode_to(out);
        self.predecessor.encode_to(out);
        self.action.encode_to(out);
        self.work.encode_to(out);
        self.signature.encode_to(out);
    }
    fn encoded_len(&self) -> usize {
        U64_WIDTH + DIGEST_WIDTH + self.action.encoded_len() + U64_WIDTH + Signature::WIDTH
    }
}

impl Decode for LatticeBlock {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        let account = AccountId::decode_from(reader)?;
        let predecessor = Digest::decode_from(reader)?;
        let action = LatticeAction::decode_from(reader)?;
        let work = reader.u64()?;
        let signature = Signature::decode_from(reader)?;
        Ok(Self::from_parts(account, predecessor, action, work, signature))
    }
}
