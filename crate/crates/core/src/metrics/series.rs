use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub name: String,
    pub unit: String,
    /// `(simulation seconds, value)`, time non-decreasing.
    pub samples: Vec<(f64, f64)>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        MetricSeries {
            name: name.into(),
            unit: unit.into(),
            samples: Vec::new(),
        }
    }

    /// Panics if `at` precedes the last sample.
    pub fn push(&mut self, at: f64, value: f64) {
        if let Some(&(last, _)) = self.samples.last() {
            assert!(at >= last, "series {} went back in time", self.name);
        }
        self.samples.push((at, value));
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn summary(&self) -> Summary {
        Summary::of(&self.values())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl Summary {
    /// Nearest-rank quantiles; all zeros for no samples.
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let rank = |q: f64| sorted[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        Summary {
            count: n,
            mean: sorted.iter().sum::<f64>() / n as f64,
            p50: rank(0.5),
            p95: rank(0.95),
            max: sorted[n - 1],
        }
    }

    pub fn stats(&self) -> [(&'static str, f64); 5] {
        [
            ("count", self.count as f64),
            ("mean", self.mean),
            ("p50", self.p50),
            ("p95", self.p95),
            ("max", self.max),
        ]
    }
}
