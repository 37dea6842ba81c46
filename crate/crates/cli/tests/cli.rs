use std::path::Path;
use std::process::{Command, Output};

fn ledgerlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ledgerlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn run_into(dir: &Path, config: &str, horizon: &str, seeds: &str) -> Output {
    let out = dir.to_str().unwrap();
    ledgerlab(&["run", "--config", config, "--horizon", horizon, "--seeds", seeds, "--out", out])
}

#[test]
fn presets_lists_every_bundled_scenario() {
    let out = ledgerlab(&["presets"]);
    assert!(out.status.success());
    let names: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(names.len(), 7);
    assert!(names.contains(&"bitcoin-baseline".to_string()));
    assert!(names.contains(&"nano-baseline".to_string()));
}

#[test]
fn validate_accepts_presets_and_rejects_bad_values() {
    let out = ledgerlab(&["validate", "--config", "fork-stress"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("fork-stress: ok"));

    let out = ledgerlab(&["validate", "--config", "fork-stress", "--override", "net.drop_prob=2.0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("net.drop_prob"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = ledgerlab(&["validate", "--config", "/no/such/file.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not found"));
}

#[test]
fn empty_seed_range_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(dir.path(), "pos-baseline", "60", "0");
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no seeds"));
    let out = run_into(dir.path(), "pos-baseline", "60", "5..2");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_one_report_pair_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(dir.path(), "pos-baseline", "240", "1..3");
    assert!(out.status.success(), "{}", stderr(&out));
    for seed in 1..=3 {
        for ext in ["json", "csv"] {
            assert!(dir.path().join(format!("pos-baseline-seed{seed}.{ext}")).exists());
        }
    }
}

#[test]
fn breach_exits_with_distinct_code_and_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = ledgerlab(&[
        "run",
        "--config",
        "nano-baseline",
        "--horizon",
        "10",
        "--override",
        "debug.conservation_breach_at_s=2.0",
        "--out",
        out,
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("balance conservation"), "{}", stderr(&run));
}

#[test]
fn compare_tabulates_both_paradigms() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), "pos-baseline", "240", "1..2").status.success());
    assert!(run_into(dir.path(), "nano-baseline", "10", "1").status.success());
    let out = ledgerlab(&["compare", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3, "{table}");
    assert!(lines[0].starts_with("scenario"));
    let chain_row = lines.iter().find(|l| l.starts_with("pos-baseline")).unwrap();
    let lattice_row = lines.iter().find(|l| l.starts_with("nano-baseline")).unwrap();
    // Each paradigm leaves the other's columns empty.
    assert!(chain_row.contains("N/A"));
    assert!(lattice_row.contains("N/A"));
    assert!(chain_row.split_whitespace().nth(2) == Some("2"));
    assert!(!stderr(&out).contains("one paradigm"));
}

#[test]
fn compare_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = ledgerlab(&["compare", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no reports"));
}

#[test]
fn inspect_prints_the_observer_view() {
    let out = ledgerlab(&["inspect", "--config", "nano-baseline", "--horizon", "5", "--seed", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("seed       2"));
    assert!(text.contains("balance conservation"));
}
