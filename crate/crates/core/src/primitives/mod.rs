//! Hashing, canonical encoding, simulated signatures and Merkle trees shared by
//! both ledger paradigms.

mod digest;
mod encoding;
mod identity;
mod merkle;

pub use digest::{digest, digest_parts, Digest, RollingDigest, DIGEST_ALGORITHM};
pub use encoding::{
    decode, encode_list, try_encode, Decode, Encode, EncodingError, Reader, COUNT_WIDTH,
    DIGEST_WIDTH, DISCRIMINANT_WIDTH, U64_WIDTH,
};
pub use identity::{AccountId, Identity, Keyring, Signature};
pub use merkle::{merkle_root, MerkleTree};
