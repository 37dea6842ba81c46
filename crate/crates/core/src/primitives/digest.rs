use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

/// Name of the pinned hash function, written into every report header.
pub const DIGEST_ALGORITHM: &str = "SHA-256";

/// A 256-bit hash value. Identifies blocks, transactions and state roots.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0u8; 32]
    }

    /// Number of leading zero bits, 0..=256.
    pub fn leading_zero_bits(&self) -> u32 {
        let mut bits = 0;
        for byte in self.0 {
            if byte == 0 {
                bits += 8;
            } else {
                bits += byte.leading_zeros();
                break;
            }
        }
        bits
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(64);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// First eight bytes as a big-endian integer; handy as an rng seed.
    pub fn prefix_u64(&self) -> u64 {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&self.0[..8]);
        u64::from_be_bytes(buf)
    }
}

/// Hashes only the trailing eight bytes. Digests are uniformly distributed,
/// except that proof-of-work puts zeros at the front.
impl std::hash::Hash for Digest {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        let mut tail = [0u8; 8];
        tail.copy_from_slice(&self.0[24..]);
        state.write_u64(u64::from_le_bytes(tail));
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Hashes `payload` with the pinned algorithm.
pub fn digest(payload: &[u8]) -> Digest {
    Digest(Sha256::digest(payload).into())
}

/// Hashes the concatenation of several byte slices without allocating.
pub fn digest_parts(parts: &[&[u8]]) -> Digest {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

/// Incremental hasher used for rolling trace digests.
#[derive(Clone, Default)]
pub struct RollingDigest {
    inner: Sha256,
}

impl RollingDigest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, bytes: &[u8]) {
        self.inner.update(bytes);
    }

    pub fn finish(&self) -> Digest {
        Digest(self.inner.clone().finalize().into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_constant() {
        assert_eq!(
            digest(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn parts_match_concatenation() {
        assert_eq!(digest_parts(&[b"ab", b"", b"cd"]), digest(b"abcd"));
    }

    #[test]
    fn leading_zeros() {
        let mut d = Digest([0xFF; 32]);
        assert_eq!(d.leading_zero_bits(), 0);
        d.0[0] = 0;
        d.0[1] = 0x10;
        assert_eq!(d.leading_zero_bits(), 11);
        assert_eq!(Digest::ZERO.leading_zero_bits(), 256);
    }
}
