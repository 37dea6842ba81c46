use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::series::{MetricSeries, Summary};

pub const CSV_HEADER: &str = "scenario,seed,metric,unit,stat,value";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    Blockchain,
    Lattice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub unit: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantStatus {
    pub name: String,
    pub held: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub paradigm: Paradigm,
    pub digest_algorithm: String,
    pub config: serde_json::Value,
    pub trace_digest: String,
    pub events: u64,
    pub scalars: BTreeMap<String, Scalar>,
    pub series: Vec<MetricSeries>,
    pub summaries: BTreeMap<String, Summary>,
    pub invariants: Vec<InvariantStatus>,
}

impl ScenarioReport {
    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).map(|s| s.value)
    }

    pub fn set_scalar(&mut self, name: &str, unit: &str, value: f64) {
        self.scalars.insert(
            name.to_string(),
            Scalar {
                unit: unit.to_string(),
                value,
            },
        );
    }

    /// Adds a series and its summary.
    pub fn add_series(&mut self, series: MetricSeries) {
        self.summaries.insert(series.name.clone(), series.summary());
        self.series.push(series);
    }

    pub fn series(&self, name: &str) -> Option<&MetricSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn breach(&self) -> Option<&InvariantStatus> {
        self.invariants.iter().find(|i| !i.held)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (name, s) in &self.scalars {
            let _ = writeln!(out, "{},{},{},{},value,{}", self.scenario, self.seed, name, s.unit, s.value);
        }
        for series in &self.series {
            let summary = &self.summaries[&series.name];
            for (stat, value) in summary.stats() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    self.scenario, self.seed, series.name, series.unit, stat, value
                );
            }
        }
        out
    }

    pub fn file_stem(&self) -> String {
        format!("{}-seed{}", self.scenario, self.seed)
    }

    /// Writes `<scenario>-seed<N>.json` and `.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let stem = self.file_stem();
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json())?;
        std::fs::write(dir.join(format!("{stem}.csv")), format!("{CSV_HEADER}\n{}", self.csv_rows()))
    }
}
