use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use super::ElectionError;
use crate::chain::{Block, Verdict};
use crate::primitives::{AccountId, Keyring};
use crate::rng::derive_rng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StakeError {
    #[error("validator {0} has no stake to slash")]
    NotFound(AccountId),
    #[error("slash rejected: {0}")]
    SlashRejected(&'static str),
}

/// Validator deposits and the running total of burned stake.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StakeRegistry {
    deposits: BTreeMap<AccountId, u64>,
    burned: u64,
}

impl StakeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_deposits(deposits: impl IntoIterator<Item = (AccountId, u64)>) -> Self {
        StakeRegistry {
            deposits: deposits.into_iter().collect(),
            burned: 0,
        }
    }

    pub fn deposit(&mut self, validator: AccountId, amount: u64) {
        *self.deposits.entry(validator).or_default() += amount;
    }

    pub fn stake_of(&self, validator: AccountId) -> u64 {
        self.deposits.get(&validator).copied().unwrap_or(0)
    }

    pub fn deposits(&self) -> &BTreeMap<AccountId, u64> {
        &self.deposits
    }

    pub fn total_stake(&self) -> u64 {
        self.deposits.values().sum()
    }

    pub fn burned(&self) -> u64 {
        self.burned
    }

    /// Selection probability of each validator with positive stake.
    pub fn probabilities(&self) -> BTreeMap<AccountId, f64> {
        let total = self.total_stake() as f64;
        self.deposits
            .iter()
            .filter(|(_, s)| **s > 0)
            .map(|(v, s)| (*v, *s as f64 / total))
            .collect()
    }

    /// Burns the whole deposit of `validator`, given a block it sealed that
    /// failed validation for a content fault.
    pub fn slash(
        &mut self,
        validator: AccountId,
        offending: &Block,
        verdict: &Verdict,
        keyring: &Keyring,
    ) -> Result<u64, StakeError> {
        if !verdict.is_misbehaviour() {
            return Err(StakeError::SlashRejected("evidence block is not invalid"));
        }
        if offending.header.producer != validator || !offending.seal_valid(keyring) {
            return Err(StakeError::SlashRejected("evidence not sealed by validator"));
        }
        let stake = match self.deposits.get_mut(&validator) {
            Some(stake) if *stake > 0 => stake,
            _ => return Err(StakeError::NotFound(validator)),
        };
        let amount = std::mem::take(stake);
        self.burned += amount;
        Ok(amount)
    }
}

/// Picks the validator for a slot with probability proportional to stake.
/// Deterministic per `(seed, round)`.
pub fn pos_select(registry: &StakeRegistry, seed: u64, round: u64) -> Result<AccountId, ElectionError> {
    let total = registry.total_stake();
    if total == 0 {
        return Err(ElectionError::NoValidator);
    }
    let mut rng = derive_rng(seed, "pos", round);
    let mut ticket = rng.random_range(0..total);
    for (&validator, &stake) in &registry.deposits {
        if ticket < stake {
            return Ok(validator);
        }
        ticket -= stake;
    }
    unreachable!("ticket drawn below total stake")
}
