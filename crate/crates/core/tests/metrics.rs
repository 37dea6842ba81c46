use ledgerlab::metrics::{tps_cap, MetricSeries, MetricsError, ScenarioReport, Summary, CSV_HEADER};
use ledgerlab::scenario::{run_scenario, ScenarioConfig};
use proptest::prelude::*;

/// Smallest sample whose cumulative count reaches `q` of all samples.
fn quantile_by_count(values: &[f64], q: f64) -> f64 {
    let n = values.len() as f64;
    let mut candidates: Vec<f64> = values.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates
        .into_iter()
        .find(|&v| values.iter().filter(|&&x| x <= v).count() as f64 >= q * n)
        .unwrap()
}

fn assert_close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())), "{a} vs {b}");
}

proptest! {
    #[test]
    fn summary_matches_recomputation(values in prop::collection::vec(-1e6f64..1e6, 1..120)) {
        let s = Summary::of(&values);
        prop_assert_eq!(s.count, values.len());
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((s.mean - mean).abs() <= 1e-6);
        prop_assert_eq!(s.p50, quantile_by_count(&values, 0.5));
        prop_assert_eq!(s.p95, quantile_by_count(&values, 0.95));
        prop_assert_eq!(s.max, values.iter().cloned().fold(f64::MIN, f64::max));
    }

    #[test]
    fn tps_cap_is_monotone(
        capacity in 1_000u64..10_000_000,
        weight in 1u64..1_000,
        interval in 0.1f64..1_000.0,
        grow in 1u64..1_000_000,
        stretch in 1.0f64..10.0,
    ) {
        let base = tps_cap(capacity, weight, interval).unwrap();
        prop_assert!(tps_cap(capacity + grow, weight, interval).unwrap() >= base);
        prop_assert!(tps_cap(capacity, weight + grow.min(capacity - weight), interval).unwrap() <= base);
        prop_assert!(tps_cap(capacity, weight, interval * stretch).unwrap() <= base);
        // Exact ceiling: whole transactions per block over the interval.
        prop_assert_eq!(base, (capacity / weight) as f64 / interval);
    }
}

#[test]
fn tps_cap_rejects_degenerate_inputs() {
    assert_eq!(tps_cap(100, 0, 1.0), Err(MetricsError::NonPositive("tx_weight")));
    assert_eq!(tps_cap(0, 5, 1.0), Err(MetricsError::NonPositive("capacity")));
    assert!(tps_cap(100, 5, 0.0).is_err());
    assert!(tps_cap(100, 5, f64::NAN).is_err());
    assert_eq!(
        tps_cap(100, 101, 1.0),
        Err(MetricsError::ZeroCapacity { capacity: 100, tx_weight: 101 })
    );
}

#[test]
fn empty_series_summarises_to_zero() {
    let series = MetricSeries::new("x", "s");
    assert!(series.is_empty());
    assert_eq!(series.summary(), Summary::default());
}

fn short(name: &str, horizon_s: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(name).unwrap();
    cfg.scenario.horizon_s = horizon_s;
    cfg
}

#[test]
fn report_summaries_recompute_from_series() {
    for report in [run_scenario(&short("nano-baseline", 40.0), 3).unwrap(), run_scenario(&short("pos-baseline", 600.0), 3).unwrap()] {
        assert!(!report.series.is_empty());
        for series in &report.series {
            let values = series.values();
            let s = &report.summaries[&series.name];
            assert_eq!(s.count, values.len(), "{}", series.name);
            if values.is_empty() {
                continue;
            }
            assert_close(s.mean, values.iter().sum::<f64>() / values.len() as f64);
            assert_eq!(s.p50, quantile_by_count(&values, 0.5));
            assert_eq!(s.p95, quantile_by_count(&values, 0.95));
        }
    }
}

#[test]
fn report_round_trips_and_flattens() {
    let report = run_scenario(&short("partition-stress", 3_000.0), 2).unwrap();
    let parsed = ScenarioReport::from_json(&report.to_json()).unwrap();
    assert_eq!(parsed, report);
    assert_eq!(CSV_HEADER, "scenario,seed,metric,unit,stat,value");
    let rows = report.csv_rows();
    let expected_rows = report.scalars.len() + 5 * report.series.len();
    assert_eq!(rows.lines().count(), expected_rows);
    for line in rows.lines() {
        assert_eq!(line.split(',').count(), 6, "{line}");
        assert!(line.starts_with("partition-stress,2,"));
    }
    // Ledger byte categories add up.
    let total = report.scalar("ledger_bytes_total").unwrap();
    let parts: f64 = report
        .scalars
        .iter()
        .filter(|(k, _)| k.starts_with("ledger_bytes_") && *k != "ledger_bytes_total")
        .map(|(_, s)| s.value)
        .sum();
    assert_eq!(parts, total);
}

#[test]
fn adopted_throughput_stays_under_capacity() {
    let cfg = short("ethereum-baseline", 900.0);
    let report = run_scenario(&cfg, 4).unwrap();
    let per_block = (cfg.chain.capacity_units / cfg.chain.tx_weight) as f64;
    let height = report.scalar("head_height").unwrap();
    let head_time = report.scalar("head_time").unwrap();
    let measured = report.scalar("tps_measured").unwrap();
    assert!(height > 10.0);
    assert!(report.scalar("adopted_txs").unwrap() <= per_block * height);
    assert!(measured <= per_block / (head_time / height) * (1.0 + 1e-12));
}
