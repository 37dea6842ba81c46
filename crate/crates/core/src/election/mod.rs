//! Leader election: proof-of-work puzzles with dynamic difficulty, the
//! hash-rate lottery used for large scenarios, and stake-weighted selection
//! with slashing. The anti-spam work on lattice blocks reuses the same puzzle.

mod difficulty;
mod lottery;
mod pow;
mod stake;

use thiserror::Error;

pub use difficulty::{retarget, DifficultySchedule, RETARGET_CLAMP};
pub use lottery::lottery_next_leader;
pub use pow::{
    antispam_pow, check_pow, mine, mine_with_budget, nonce_start, work_digest, MiningError,
    Solution, MAX_GRIND_BITS,
};
pub use stake::{pos_select, StakeError, StakeRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElectionError {
    #[error("no miner has a positive hash rate")]
    NoLeader,
    #[error("total stake is zero")]
    NoValidator,
}
