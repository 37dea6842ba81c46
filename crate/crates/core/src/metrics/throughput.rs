use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("transaction weight {tx_weight} exceeds block capacity {capacity}: zero capacity")]
    ZeroCapacity { capacity: u64, tx_weight: u64 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("measurement needs a {expected} run")]
    WrongParadigm { expected: &'static str },
}

/// Ceiling on transactions per second for a chain that seals one block of
/// `capacity` weight units every `interval_s` seconds.
pub fn tps_cap(capacity: u64, tx_weight: u64, interval_s: f64) -> Result<f64, MetricsError> {
    if capacity == 0 {
        return Err(MetricsError::NonPositive("capacity"));
    }
    if tx_weight == 0 {
        return Err(MetricsError::NonPositive("tx_weight"));
    }
    if !(interval_s > 0.0) {
        return Err(MetricsError::NonPositive("interval"));
    }
    if tx_weight > capacity {
        return Err(MetricsError::ZeroCapacity { capacity, tx_weight });
    }
    Ok((capacity / tx_weight) as f64 / interval_s)
}
