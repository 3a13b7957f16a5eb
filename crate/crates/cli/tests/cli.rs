use std::fs;
use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_airport-sim"))
}

#[test]
fn batch_writes_outputs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["batch", "--runs", "3", "--series", "--svg", "--trace", "-o"])
        .arg(dir.path())
        .args(["--set", "arrival-window=50"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("total-satisfactionAmI"));
    assert!(stdout.contains("3 runs in"));
    for f in [
        "runs.csv",
        "summary.csv",
        "series-mean.csv",
        "satisfaction.svg",
        "trace-1.tsv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 4);
}

#[test]
fn truncated_runs_exit_with_status_2() {
    let out = cli()
        .args(["batch", "--runs", "1", "--set", "max-ticks=5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("a.conf");
    fs::write(&conf, "boarding-gates = 6\n").unwrap();
    let out = cli()
        .arg("config")
        .arg("-c")
        .arg(&conf)
        .args(["--set", "seed=9"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("boarding-gates = 6"));
    assert!(text.contains("seed = 9"));
}

#[test]
fn bad_values_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "# comment\nflights = many\n").unwrap();
    let out = cli().arg("map").arg("-c").arg(&conf).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("flights") && err.contains("line 2"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let out = cli().args(["config", "--set", "gates=3"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn map_prints_the_layout() {
    let out = cli().arg("map").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 33);
    assert!(text.contains('E') && text.contains('G'));
}
