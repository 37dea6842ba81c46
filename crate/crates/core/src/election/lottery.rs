use std::collections::BTreeMap;

use rand::Rng;

use super::ElectionError;
use crate::primitives::AccountId;
use crate::rng::derive_rng;

/// Picks the next block producer with probability proportional to its hash
/// rate. Deterministic per `(seed, round)`.
///
/// This replaces literal nonce grinding when scenarios are too large to grind:
/// the winner of a proof-of-work race is distributed exactly this way.
pub fn lottery_next_leader(
    hash_powers: &BTreeMap<AccountId, f64>,
    seed: u64,
    round: u64,
) -> Result<AccountId, ElectionError> {
    let total: f64 = hash_powers.values().filter(|r| **r > 0.0).sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(ElectionError::NoLeader);
    }
    let mut rng = derive_rng(seed, "lottery", round);
    let mut ticket = rng.random::<f64>() * total;
    let mut last = None;
    for (&miner, &rate) in hash_powers.iter().filter(|(_, r)| **r > 0.0) {
        if ticket < rate {
            return Ok(miner);
        }
        ticket -= rate;
        last = Some(miner);
    }
    // Floating-point residue can leave the ticket at the very end.
    last.ok_or(ElectionError::NoLeader)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_miner_always_wins() {
        let rates = BTreeMap::from([(AccountId(4), 2.5)]);
        for round in 0..50 {
            assert_eq!(lottery_next_leader(&rates, 1, round).unwrap(), AccountId(4));
        }
    }

    #[test]
    fn zero_rates_error() {
        let rates = BTreeMap::from([(AccountId(0), 0.0), (AccountId(1), 0.0)]);
        assert_eq!(lottery_next_leader(&rates, 1, 0), Err(ElectionError::NoLeader));
        assert_eq!(lottery_next_leader(&BTreeMap::new(), 1, 0), Err(ElectionError::NoLeader));
    }

    #[test]
    fn zero_rate_never_wins() {
        let rates = BTreeMap::from([(AccountId(0), 0.0), (AccountId(1), 1.0)]);
        for round in 0..200 {
            assert_eq!(lottery_next_leader(&rates, 3, round).unwrap(), AccountId(1));
        }
    }
}
