use thiserror::Error;

use crate::primitives::{digest_parts, Digest};

/// Largest difficulty accepted for literal nonce grinding.
pub const MAX_GRIND_BITS: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MiningError {
    #[error("no solution at {bits} bits within {budget} attempts")]
    BudgetExceeded { bits: u32, budget: u64 },
    #[error("difficulty {0} bits exceeds 255")]
    DifficultyOutOfRange(u32),
}

/// A solved puzzle and the number of digest evaluations it cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Solution {
    pub nonce: u64,
    pub attempts: u64,
}

/// Digest of `header_digest || nonce`, the value the puzzle constrains.
pub fn work_digest(header_digest: &Digest, nonce: u64) -> Digest {
    digest_parts(&[header_digest.as_bytes(), &nonce.to_be_bytes()])
}

/// True iff the work digest has at least `difficulty_bits` leading zero bits.
pub fn check_pow(header_digest: &Digest, nonce: u64, difficulty_bits: u32) -> bool {
    if difficulty_bits == 0 {
        return true;
    }
    work_digest(header_digest, nonce).leading_zero_bits() >= difficulty_bits
}

/// First nonce of the enumeration order for `seed`.
pub fn nonce_start(seed: u64) -> u64 {
    digest_parts(&[b"ledgerlab/nonce-start", &seed.to_be_bytes()]).prefix_u64()
}

fn default_budget(bits: u32) -> u64 {
    1u64 << (bits + 6).min(40)
}

/// Grinds nonces in seeded order until the puzzle is solved.
pub fn mine(header_digest: &Digest, difficulty_bits: u32, seed: u64) -> Result<Solution, MiningError> {
    mine_with_budget(header_digest, difficulty_bits, seed, default_budget(difficulty_bits))
}

pub fn mine_with_budget(
    header_digest: &Digest,
    difficulty_bits: u32,
    seed: u64,
    budget: u64,
) -> Result<Solution, MiningError> {
    if difficulty_bits > 255 {
        return Err(MiningError::DifficultyOutOfRange(difficulty_bits));
    }
    let start = nonce_start(seed);
    for attempt in 0..budget {
        let nonce = start.wrapping_add(attempt);
        if check_pow(header_digest, nonce, difficulty_bits) {
            return Ok(Solution {
                nonce,
                attempts: attempt + 1,
            });
        }
    }
    Err(MiningError::BudgetExceeded {
        bits: difficulty_bits,
        budget,
    })
}

/// Anti-spam work attached to lattice blocks. Same puzzle as block mining.
pub fn antispam_pow(tx_digest: &Digest, spam_difficulty_bits: u32) -> Result<Solution, MiningError> {
    // Seeding from the transaction digest keeps the nonce a pure function of the block.
    mine(tx_digest, spam_difficulty_bits, tx_digest.prefix_u64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::digest;

    #[test]
    fn zero_bits_always_passes() {
        assert!(check_pow(&digest(b"x"), 12345, 0));
        let sol = mine(&digest(b"x"), 0, 99).unwrap();
        assert_eq!(sol.nonce, nonce_start(99));
        assert_eq!(sol.attempts, 1);
    }

    #[test]
    fn mined_nonce_verifies_and_is_repeatable() {
        let h = digest(b"header");
        let a = mine(&h, 8, 5).unwrap();
        assert!(check_pow(&h, a.nonce, 8));
        assert_eq!(a, mine(&h, 8, 5).unwrap());
    }

    #[test]
    fn budget_error() {
        let h = digest(b"header");
        assert!(matches!(
            mine_with_budget(&h, 40, 1, 10),
            Err(MiningError::BudgetExceeded { .. })
        ));
        assert!(mine(&h, 256, 1).is_err());
    }
}
