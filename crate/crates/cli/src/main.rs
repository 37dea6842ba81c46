use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ledgerlab::metrics::{Paradigm, ScenarioReport};
use ledgerlab::scenario::{preset_names, run_scenario, run_scenario_suite, ScenarioConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_BREACH: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "ledgerlab", version, about = "Run blockchain and block-lattice ledger simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario for every seed and write one report per run.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Inclusive range `A..B`, or a count `N` meaning seeds 1..N.
        #[arg(long, default_value = "1")]
        seeds: String,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Parse and check a configuration without running it.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run one seed and print the observer's ledger and metrics.
    Inspect {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print a side-by-side table of the reports in a directory.
    Compare {
        dir: PathBuf,
    },
    /// List the bundled scenario presets.
    Presets,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Config file path or bundled preset name.
    #[arg(long)]
    config: String,
    /// Overrides `scenario.horizon_s`.
    #[arg(long)]
    horizon: Option<f64>,
    /// Dotted `KEY=VALUE`; the value is read as a TOML literal.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, String> {
        let mut overrides = self.overrides.clone();
        if let Some(h) = self.horizon {
            overrides.push(format!("scenario.horizon_s={h:?}"));
        }
        ScenarioConfig::load(&self.config, &overrides).map_err(|e| e.to_string())
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("invalid --seeds `{text}`: expected `A..B` or a count");
    let seeds: Vec<u64> = match text.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            (a..=b).collect()
        }
        None => (1..=text.trim().parse::<u64>().map_err(|_| bad())?).collect(),
    };
    if seeds.is_empty() {
        return Err("no seeds".into());
    }
    Ok(seeds)
}

fn breach_message(report: &ScenarioReport) -> Option<String> {
    let b = report.breach()?;
    Some(format!(
        "invariant breached: {} (scenario {}, seed {}){}",
        b.name,
        report.scenario,
        report.seed,
        b.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default()
    ))
}

fn cmd_run(scenario: &ScenarioArgs, seeds: &str, out: &Path) -> Result<u8, String> {
    let seeds = parse_seeds(seeds)?;
    let cfg = scenario.load()?;
    let reports = run_scenario_suite(&cfg, &seeds, Some(out)).map_err(|e| e.to_string())?;
    let mut status = 0;
    for r in &reports {
        if let Some(msg) = breach_message(r) {
            eprintln!("{msg}");
            status = EXIT_BREACH;
        }
    }
    println!("wrote {} reports to {}", reports.len(), out.display());
    Ok(status)
}

fn cmd_validate(scenario: &ScenarioArgs) -> Result<u8, String> {
    let cfg = scenario.load()?;
    let variants = cfg.expand_sweep().map_err(|e| e.to_string())?;
    println!("{}: ok ({} variant(s))", cfg.scenario.name, variants.len());
    Ok(0)
}

fn cmd_inspect(scenario: &ScenarioArgs, seed: u64) -> Result<u8, String> {
    let cfg = scenario.load()?;
    let report = run_scenario(&cfg, seed).map_err(|e| e.to_string())?;
    println!("scenario   {}", report.scenario);
    println!("paradigm   {:?}", report.paradigm);
    println!("seed       {}", report.seed);
    println!("events     {}", report.events);
    println!("trace      {} {}", report.digest_algorithm, report.trace_digest);
    println!();
    for (name, s) in &report.scalars {
        println!("{name:<32} {:>16} {}", format_value(s.value), s.unit);
    }
    println!();
    for (name, s) in &report.summaries {
        println!(
            "{name:<24} n={:<6} mean={} p50={} p95={} max={}",
            s.count,
            format_value(s.mean),
            format_value(s.p50),
            format_value(s.p95),
            format_value(s.max)
        );
    }
    println!();
    for inv in &report.invariants {
        println!("{:<36} {}", inv.name, if inv.held { "held" } else { "BREACHED" });
    }
    match breach_message(&report) {
        Some(msg) => {
            eprintln!("{msg}");
            Ok(EXIT_BREACH)
        }
        None => Ok(0),
    }
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

fn load_reports(dir: &Path) -> Result<Vec<ScenarioReport>, String> {
    let entries = std::fs::read_dir(dir).map_err(|e| format!("cannot read {}: {e}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            ScenarioReport::from_json(&text).map_err(|e| format!("{}: {e}", p.display()))
        })
        .collect()
}

const NA: &str = "N/A";

fn mean_of(reports: &[&ScenarioReport], value: impl Fn(&ScenarioReport) -> Option<f64>) -> String {
    let values: Vec<f64> = reports.iter().filter_map(|r| value(r)).collect();
    if values.is_empty() {
        return NA.into();
    }
    format_value(values.iter().sum::<f64>() / values.len() as f64)
}

fn series_mean(name: &'static str) -> impl Fn(&ScenarioReport) -> Option<f64> {
    move |r| r.summaries.get(name).filter(|s| s.count > 0).map(|s| s.mean)
}

fn for_paradigm(
    paradigm: Paradigm,
    want: Paradigm,
    f: impl Fn(&ScenarioReport) -> Option<f64>,
) -> impl Fn(&ScenarioReport) -> Option<f64> {
    move |r| if paradigm == want { f(r) } else { None }
}

fn cmd_compare(dir: &Path) -> Result<u8, String> {
    let reports = load_reports(dir)?;
    if reports.is_empty() {
        return Err(format!("no reports in {}", dir.display()));
    }
    let mut groups: BTreeMap<(String, String), Vec<&ScenarioReport>> = BTreeMap::new();
    for r in &reports {
        let paradigm = serde_label(r.paradigm);
        groups.entry((paradigm, r.scenario.clone())).or_default().push(r);
    }
    let paradigms: std::collections::BTreeSet<&String> = groups.keys().map(|k| &k.0).collect();
    if paradigms.len() < 2 {
        eprintln!("warning: all reports come from one paradigm; comparison columns for the other are absent");
    }
    let header = [
        "scenario",
        "paradigm",
        "runs",
        "tps",
        "confirm_latency_s",
        "settle_latency_s",
        "orphan_rate",
        "reorgs",
        "conflicts",
        "ledger_bytes",
    ];
    let mut rows = vec![header.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    use Paradigm::{Blockchain as B, Lattice as L};
    for ((paradigm, scenario), rs) in &groups {
        let p = rs[0].paradigm;
        rows.push(vec![
            scenario.clone(),
            paradigm.clone(),
            rs.len().to_string(),
            mean_of(rs, |r| match r.paradigm {
                B => r.scalar("tps_measured"),
                L => r.scalar("settled_tps"),
            }),
            mean_of(rs, for_paradigm(p, B, series_mean("confirmation_latency"))),
            mean_of(rs, for_paradigm(p, L, series_mean("settlement_latency"))),
            mean_of(rs, for_paradigm(p, B, |r| r.scalar("orphan_rate"))),
            mean_of(rs, for_paradigm(p, B, |r| r.scalar("reorgs"))),
            mean_of(rs, for_paradigm(p, L, |r| r.scalar("conflicts_injected"))),
            mean_of(rs, |r| r.scalar("ledger_bytes_total")),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for row in rows {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        println!("{}", cells.join("  ").trim_end());
    }
    Ok(0)
}

fn serde_label(p: Paradigm) -> String {
    match p {
        Paradigm::Blockchain => "blockchain".into(),
        Paradigm::Lattice => "lattice".into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match &cli.command {
        Command::Run { scenario, seeds, out } => cmd_run(scenario, seeds, out),
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::Inspect { scenario, seed } => cmd_inspect(scenario, *seed),
        Command::Compare { dir } => cmd_compare(dir),
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("2").unwrap(), vec![1, 2]);
        assert_eq!(parse_seeds("0").unwrap_err(), "no seeds");
        assert_eq!(parse_seeds("5..4").unwrap_err(), "no seeds");
        assert!(parse_seeds("x").is_err());
    }
}
