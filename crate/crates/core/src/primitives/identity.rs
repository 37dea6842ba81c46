//! Simulated identities and keyed-digest signatures.
//!
//! A signature tag is `H("sig" || secret || payload)`. Verification looks the
//! signer's secret up in a [`Keyring`], so only registered identities can
//! produce tags that verify.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::digest::{digest_parts, Digest};
use super::encoding::{Decode, Encode, EncodingError, Reader, DIGEST_WIDTH, U64_WIDTH};

#[derive(
    Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct AccountId(pub u64);

impl fmt::Debug for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "acct#{}", self.0)
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Encode for AccountId {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.0.encode_to(out);
    }
    fn encoded_len(&self) -> usize {
        U64_WIDTH
    }
}

impl Decode for AccountId {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        Ok(AccountId(reader.u64()?))
    }
}

#[derive(Clone)]
pub struct Identity {
    id: AccountId,
    secret: [u8; 32],
}

impl Identity {
    /// Derives the signing secret from the scenario seed and account id.
    pub fn derive(scenario_seed: u64, id: AccountId) -> Self {
        let secret = digest_parts(&[
            b"ledgerlab/identity",
            &scenario_seed.to_be_bytes(),
            &id.0.to_be_bytes(),
        ]);
        Identity {
            id,
            secret: secret.0,
        }
    }

    pub fn id(&self) -> AccountId {
        self.id
    }

    pub fn sign(&self, payload: Digest) -> Signature {
        Signature {
            signer: self.id,
            payload,
            tag: tag(&self.secret, payload),
        }
    }
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Identity").field("id", &self.id).finish_non_exhaustive()
    }
}

fn tag(secret: &[u8; 32], payload: Digest) -> Digest {
    digest_parts(&[b"sig", secret, payload.as_bytes()])
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Signature {
    pub signer: AccountId,
    pub payload: Digest,
    pub tag: Digest,
}

impl Signature {
    pub const WIDTH: usize = U64_WIDTH + 2 * DIGEST_WIDTH;
}

impl Encode for Signature {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.signer.encode_to(out);
        self.payload.encode_to(out);
        self.tag.encode_to(out);
    }
    fn encoded_len(&self) -> usize {
        Self::WIDTH
    }
}

impl Decode for Signature {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        Ok(Signature {
            signer: AccountId::decode_from(reader)?,
            payload: Digest::decode_from(reader)?,
            tag: Digest::decode_from(reader)?,
        })
    }
}

/// Registry of simulated identities known to a scenario.
#[derive(Clone, Debug, Default)]
pub struct Keyring {
    identities: BTreeMap<AccountId, Identity>,
}

impl Keyring {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keyring holding identities `0..count` derived from `seed`.
    pub fn with_accounts(seed: u64, count: u64) -> Self {
        let mut ring = Keyring::new();
        for id in 0..count {
            ring.insert(Identity::derive(seed, AccountId(id)));
        }
        ring
    }

    pub fn insert(&mut self, identity: Identity) {
        self.identities.insert(identity.id, identity);
    }

    pub fn get(&self, id: AccountId) -> Option<&Identity> {
        self.identities.get(&id)
    }

    pub fn contains(&self, id: AccountId) -> bool {
        self.identities.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    /// True iff `sig` was produced by `signer`'s secret over `payload`.
    pub fn verify(&self, sig: &Signature, signer: AccountId, payload: Digest) -> bool {
        if sig.signer != signer || sig.payload != payload {
            return false;
        }
        match self.identities.get(&signer) {
            Some(identity) => tag(&identity.secret, payload) == sig.tag,
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::digest::digest;

    #[test]
    fn signature_verifies_only_for_producer() {
        let ring = Keyring::with_accounts(7, 3);
        let payload = digest(b"hello");
        let sig = ring.get(AccountId(1)).unwrap().sign(payload);
        assert!(ring.verify(&sig, AccountId(1), payload));
        assert!(!ring.verify(&sig, AccountId(2), payload));
        assert!(!ring.verify(&sig, AccountId(1), digest(b"other")));
    }

    #[test]
    fn forged_signer_field_fails() {
        let ring = Keyring::with_accounts(7, 3);
        let payload = digest(b"x");
        let mut sig = ring.get(AccountId(0)).unwrap().sign(payload);
        sig.signer = AccountId(2);
        assert!(!ring.verify(&sig, AccountId(2), payload));
    }

    #[test]
    fn unknown_signer_fails() {
        let ring = Keyring::with_accounts(7, 1);
        let outsider = Identity::derive(7, AccountId(9));
        let payload = digest(b"x");
        assert!(!ring.verify(&outsider.sign(payload), AccountId(9), payload));
    }

    #[test]
    fn secrets_depend_on_seed() {
        let a = Identity::derive(1, AccountId(0)).sign(Digest::ZERO);
        let b = Identity::derive(2, AccountId(0)).sign(Digest::ZERO);
        assert_ne!(a.tag, b.tag);
    }
}
