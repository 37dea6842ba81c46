use serde::{Deserialize, Serialize};

/// Per-adjustment clamp on the difficulty multiplier.
pub const RETARGET_CLAMP: f64 = 4.0;

/// Dynamic proof-of-work difficulty, expressed as the expected number of
/// digest evaluations per block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultySchedule {
    pub target_interval_s: f64,
    pub retarget_window: u64,
    pub expected_hashes: f64,
}

impl DifficultySchedule {
    pub fn new(target_interval_s: f64, retarget_window: u64, expected_hashes: f64) -> Self {
        assert!(expected_hashes > 0.0, "difficulty must be positive");
        assert!(retarget_window > 0, "retarget window must be at least one block");
        DifficultySchedule {
            target_interval_s,
            retarget_window,
            expected_hashes,
        }
    }

    /// Difficulty that makes `hashrate` produce one block per target interval.
    pub fn for_hashrate(target_interval_s: f64, retarget_window: u64, hashrate: f64) -> Self {
        Self::new(target_interval_s, retarget_window, hashrate * target_interval_s)
    }

    /// The difficulty as a leading-zero-bit count, `round(log2(expected_hashes))`.
    pub fn leading_zero_bits(&self) -> u32 {
        self.expected_hashes.log2().round().clamp(0.0, 255.0) as u32
    }

    /// Mean seconds per block for a given total hash rate.
    pub fn mean_interval(&self, hashrate: f64) -> f64 {
        self.expected_hashes / hashrate
    }

    pub fn is_retarget_height(&self, height: u64) -> bool {
        height > 0 && height % self.retarget_window == 0
    }
}

/// Scales difficulty by expected over observed window duration, clamped to a
/// factor of four either way.
pub fn retarget(schedule: &DifficultySchedule, observed_window_s: f64) -> DifficultySchedule {
    assert!(observed_window_s > 0.0, "observed window duration must be positive");
    let expected = schedule.target_interval_s * schedule.retarget_window as f64;
    let factor = (expected / observed_window_s).clamp(1.0 / RETARGET_CLAMP, RETARGET_CLAMP);
    DifficultySchedule {
        expected_hashes: schedule.expected_hashes * factor,
        ..*schedule
    }
}
