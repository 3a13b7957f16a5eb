mod common;

use std::fs;

use airport_sim::metrics::mean_stddev;
use airport_sim::ExperimentConfig;
use common::{batch_files, check_summary, random_config_text, scenario_rng, welford};

/// Summary rows recomputed from the per-run CSV match the written summary
/// to 1e-9 relative.
#[test]
fn summary_matches_recomputation_from_runs_csv() {
    let mut rng = scenario_rng(10);
    for _ in 0..8 {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("run.conf");
        let text = random_config_text(&mut rng).replace("runs = ", "runs = 1");
        fs::write(&config, text).unwrap();
        let files = batch_files(&config, &dir.path().join("out"));
        let runs = String::from_utf8(files["runs.csv"].clone()).unwrap();
        let summary = String::from_utf8(files["summary.csv"].clone()).unwrap();
        let worst = check_summary(&runs, &summary).unwrap();
        assert!(worst <= 1e-9, "relative error {worst}");
    }
}

#[test]
fn single_run_aggregate_equals_the_run() {
    let cfg = ExperimentConfig {
        runs: 1,
        ..ExperimentConfig::default()
    };
    let out = airport_sim::batch(&cfg).unwrap();
    let h = out.results[0].headline();
    for (row, v) in out.summary.rows.iter().zip(h) {
        assert_eq!(row.average, v);
        assert_eq!(row.stddev, 0.0);
    }
}

#[test]
fn summary_has_the_four_named_rows() {
    let out = airport_sim::batch(&ExperimentConfig {
        runs: 2,
        ..ExperimentConfig::default()
    })
    .unwrap();
    let mut csv = Vec::new();
    out.summary.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "name",
            "total-satisfaction",
            "total-satisfactionAmI",
            "average-time",
            "average-timeAmI"
        ]
    );
}

#[test]
fn textbook_values() {
    // 2, 4, 4, 4, 5, 5, 7, 9: mean 5, sample variance 32/7.
    let v = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
    let (m, s) = mean_stddev(&v);
    assert_eq!(m, 5.0);
    assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    let (wm, ws) = welford(&v);
    assert!((wm - m).abs() < 1e-12 && (ws - s).abs() < 1e-12);
}
