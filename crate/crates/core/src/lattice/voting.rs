use std::collections::BTreeMap;

use crate::primitives::{
    digest, AccountId, Decode, Digest, Encode, EncodingError, Identity, Keyring, Reader,
    Signature, DIGEST_WIDTH, U64_WIDTH,
};

/// A representative's signed endorsement of one successor for a contested
/// predecessor. Higher `sequence` supersedes an earlier vote by the same
/// representative on the same subject.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VoteRecord {
    pub representative: AccountId,
    pub subject: Digest,
    pub choice: Digest,
    pub weight: u64,
    pub sequence: u64,
    pub signature: Signature,
}

impl VoteRecord {
    pub fn new(rep: &Identity, subject: Digest, choice: Digest, weight: u64, sequence: u64) -> Self {
        let payload = Self::payload(rep.id(), subject, choice, weight, sequence);
        VoteRecord {
            representative: rep.id(),
            subject,
            choice,
            weight,
            sequence,
            signature: rep.sign(payload),
        }
    }

    fn payload(rep: AccountId, subject: Digest, choice: Digest, weight: u64, sequence: u64) -> Digest {
        let mut buf = Vec::with_capacity(3 * U64_WIDTH + 2 * DIGEST_WIDTH);
        rep.encode_to(&mut buf);
        subject.encode_to(&mut buf);
        choice.encode_to(&mut buf);
        weight.encode_to(&mut buf);
        sequence.encode_to(&mut buf);
        digest(&buf)
    }

    pub fn signature_valid(&self, keyring: &Keyring) -> bool {
        let payload = Self::payload(
            self.representative,
            self.subject,
            self.choice,
            self.weight,
            self.sequence,
        );
        keyring.verify(&self.signature, self.representative, payload)
    }

    pub fn id(&self) -> Digest {
        digest(&self.encode())
    }
}

impl Encode for VoteRecord {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.representative.encode_to(out);
        self.subject.encode_to(out);
        self.choice.encode_to(out);
        self.weight.encode_to(out);
        self.sequence.encode_to(out);
        self.signature.encode_to(out);
    }
    fn encoded_len(&self) -> usize {
        3 * U64_WIDTH + 2 * DIGEST_WIDTH + Signature::WIDTH
    }
}

impl Decode for VoteRecord {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        Ok(VoteRecord {
            representative: AccountId::decode_from(reader)?,
            subject: Digest::decode_from(reader)?,
            choice: Digest::decode_from(reader)?,
            weight: reader.u64()?,
            sequence: reader.u64()?,
            signature: Signature::decode_from(reader)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForkResolution {
    Winner(Digest),
    Undecided {
        /// Two or more candidates share the top weight.
        tied: bool,
        /// Every unit of delegated weight has voted; more votes cannot arrive.
        full_participation: bool,
    },
}

impl ForkResolution {
    pub fn winner(&self) -> Option<Digest> {
        match self {
            ForkResolution::Winner(d) => Some(*d),
            ForkResolution::Undecided { .. } => None,
        }
    }

    /// An exact tie with full participation can never resolve.
    pub fn is_permanent_tie(&self) -> bool {
        matches!(
            self,
            ForkResolution::Undecided {
                tied: true,
                full_participation: true
            }
        )
    }
}

/// Sums vote weight per candidate and declares a winner only when one
/// candidate is strictly ahead and holds more than `quorum_fraction` of
/// `total_weight`.
///
/// Votes for other subjects or non-candidates are ignored; when a
/// representative appears more than once, its highest-sequence vote counts.
pub fn resolve_fork<'a>(
    subject: Digest,
    candidates: &[Digest],
    votes: impl IntoIterator<Item = &'a VoteRecord>,
    total_weight: u64,
    quorum_fraction: f64,
) -> ForkResolution {
    let mut latest: BTreeMap<AccountId, &VoteRecord> = BTreeMap::new();
    for vote in votes {
        if vote.subject != subject || !candidates.contains(&vote.choice) {
            continue;
        }
        match latest.get(&vote.representative) {
            Some(prev) if prev.sequence >= vote.sequence => {}
            _ => {
                latest.insert(vote.representative, vote);
            }
        }
    }
    let mut tally: BTreeMap<Digest, u128> = BTreeMap::new();
    let mut participating: u128 = 0;
    for vote in latest.values() {
        *tally.entry(vote.choice).or_default() += vote.weight as u128;
        participating += vote.weight as u128;
    }
    let mut ranked: Vec<(Digest, u128)> = tally.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let full_participation = participating >= total_weight as u128;
    match ranked.as_slice() {
        [] => ForkResolution::Undecided {
            tied: false,
            full_participation,
        },
        [(leader, w), rest @ ..] => {
            let tied = rest.first().is_some_and(|(_, w2)| w2 == w);
            if !tied && (*w as f64) > quorum_fraction * total_weight as f64 {
                ForkResolution::Winner(*leader)
            } else {
                ForkResolution::Undecided {
                    tied,
                    full_participation,
                }
            }
        }
    }
}
