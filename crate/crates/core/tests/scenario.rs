use ledgerlab::scenario::{preset_names, run_scenario, run_scenario_suite, ConfigError, ScenarioConfig};

fn short(name: &str, horizon_s: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(name).unwrap();
    cfg.scenario.horizon_s = horizon_s;
    cfg
}

#[test]
fn every_preset_validates() {
    let names: Vec<&str> = preset_names().collect();
    assert_eq!(names.len(), 7);
    for name in names {
        let cfg = ScenarioConfig::preset(name).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.scenario.name, name);
    }
    assert!(matches!(ScenarioConfig::preset("nope"), Err(ConfigError::NotFound(_))));
}

#[test]
fn unknown_keys_are_rejected() {
    let err = ScenarioConfig::from_toml_str("[scenario]\nname = \"x\"\nnodez = 3\n").unwrap_err();
    assert!(matches!(err, ConfigError::Parse(_)), "{err}");
    let err = ScenarioConfig::load("nano-baseline", &["lattice.quorom_fraction=0.6".into()]).unwrap_err();
    assert!(matches!(err, ConfigError::Parse(_)), "{err}");
}

#[test]
fn overrides_replace_values_and_are_validated() {
    let cfg = ScenarioConfig::load(
        "bitcoin-baseline",
        &["scenario.horizon_s=120".into(), "net.jitter_ms=0.0".into()],
    )
    .unwrap();
    assert_eq!(cfg.scenario.horizon_s, 120.0);
    assert_eq!(cfg.net.jitter_ms, 0.0);
    assert!(matches!(
        ScenarioConfig::load("bitcoin-baseline", &["net.drop_prob=1.5".into()]),
        Err(ConfigError::Invalid { .. })
    ));
    assert!(matches!(
        ScenarioConfig::load("bitcoin-baseline", &["no-equals-sign".into()]),
        Err(ConfigError::BadOverride(_))
    ));
    assert!(matches!(
        ScenarioConfig::load("/definitely/missing.toml", &[]),
        Err(ConfigError::NotFound(_))
    ));
}

#[test]
fn sweep_expands_one_config_per_value() {
    let mut cfg = short("nano-baseline", 5.0);
    cfg.sweep.key = "lattice.quorum_fraction".into();
    cfg.sweep.values = vec![toml::Value::Float(0.5), toml::Value::Float(0.67)];
    let variants = cfg.expand_sweep().unwrap();
    assert_eq!(variants.len(), 2);
    assert_eq!(variants[0].lattice.quorum_fraction, 0.5);
    assert_eq!(variants[1].lattice.quorum_fraction, 0.67);
    assert_eq!(variants[0].scenario.name, "nano-baseline@quorum_fraction=0.5");
    assert!(variants.iter().all(|v| v.sweep.key.is_empty()));
}

#[test]
fn suite_writes_one_report_pair_per_run() {
    let dir = std::env::temp_dir().join(format!("ledgerlab-suite-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let cfg = short("pos-baseline", 300.0);
    let reports = run_scenario_suite(&cfg, &[1, 2, 3], Some(&dir)).unwrap();
    assert_eq!(reports.len(), 3);
    for report in &reports {
        let json = std::fs::read_to_string(dir.join(format!("{}.json", report.file_stem()))).unwrap();
        assert_eq!(json, report.to_json());
        let csv = std::fs::read_to_string(dir.join(format!("{}.csv", report.file_stem()))).unwrap();
        assert!(csv.starts_with("scenario,seed,metric,unit,stat,value\n"));
    }
    assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 6);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn reports_are_reproducible_and_seed_dependent() {
    let cfg = short("partition-stress", 2_000.0);
    let a = run_scenario(&cfg, 11).unwrap();
    let b = run_scenario(&cfg, 11).unwrap();
    let c = run_scenario(&cfg, 12).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_ne!(a.trace_digest, c.trace_digest);
}

#[test]
fn deeper_confirmations_are_never_less_safe() {
    let cfg = ScenarioConfig::preset("partition-stress").unwrap();
    let mut lost_somewhere = false;
    for seed in 1..=3 {
        let report = run_scenario(&cfg, seed).unwrap();
        let mut previous: Option<(f64, f64)> = None;
        for d in 1..=8 {
            let reached = report.scalar(&format!("survival_reached_d{d}")).unwrap();
            let lost = reached - report.scalar(&format!("survival_survived_d{d}")).unwrap();
            lost_somewhere |= lost > 0.0;
            if let Some((prev_reached, prev_lost)) = previous {
                assert!(reached <= prev_reached, "seed {seed} d{d}");
                assert!(lost <= prev_lost, "seed {seed} d{d}");
            }
            previous = Some((reached, lost));
        }
    }
    // The partition must actually cost the minority side some blocks.
    assert!(lost_somewhere);
}

#[test]
fn chain_runs_respect_block_capacity() {
    for name in ["bitcoin-baseline", "pos-baseline"] {
        let cfg = short(name, 20.0 * cfg_interval(name));
        let report = run_scenario(&cfg, 5).unwrap();
        let per_block = (cfg.chain.capacity_units / cfg.chain.tx_weight) as f64;
        let height = report.scalar("head_height").unwrap();
        assert!(height > 0.0, "{name}");
        assert!(report.scalar("adopted_txs").unwrap() <= per_block * height, "{name}");
        assert!(report.breach().is_none(), "{name}");
    }
}

fn cfg_interval(name: &str) -> f64 {
    ScenarioConfig::preset(name).unwrap().block_interval_s()
}

#[test]
fn injected_breach_is_reported_by_name() {
    for (name, at) in [("pos-baseline", 100.0), ("nano-baseline", 5.0)] {
        let mut cfg = short(name, 4.0 * at);
        cfg.debug.conservation_breach_at_s = Some(at);
        let report = run_scenario(&cfg, 1).unwrap();
        let breach = report.breach().expect("breach recorded");
        assert_eq!(breach.name, "balance conservation", "{name}");
        assert!(!breach.held);
    }
}
