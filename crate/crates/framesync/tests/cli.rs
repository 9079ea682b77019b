//! End-to-end checks of the command-line interface and its file formats.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn framesync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_framesync"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn threshold_explicit_channel() {
    let out = framesync(&["threshold", "--eps-f", "0.1", "--eps-m", "0.1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("alpha: 1.75777966e0 nats"), "{text}");
    assert!(text.contains("best symbol x(1): 1"));
}

#[test]
fn threshold_awgn_channel() {
    let out = framesync(&[
        "threshold", "--power", "4", "--sigma2", "1", "--a", "0.5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("exact"), "{text}");
    assert!(text.contains("exponential"));
    assert!(text.contains("asymptote P/(2 sigma^2): 2.00000000e0"));
}

#[test]
fn threshold_conflicting_channel_flags_exit_1() {
    let out = framesync(&[
        "threshold", "--eps-f", "0.1", "--eps-m", "0.1", "--sigma2", "1", "--a", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn word_writes_binary_line_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("word.txt");
    let out = framesync(&[
        "word", "--n", "14", "--k", "2", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("M: 3"), "{text}");
    assert!(text.contains("N1 (mark count): 10"));
    let file = fs::read_to_string(&path).unwrap();
    assert!(file.ends_with('\n'));
    let line = file.trim_end();
    assert_eq!(line.len(), 14);
    assert!(line.chars().all(|c| c == '0' || c == '1'));
    let word = framesync::syncword::SyncWord::parse_line(&file).unwrap();
    assert_eq!(word.n_ones(), 10);
}

#[test]
fn oracle_probabilities_sum_to_one() {
    let out = framesync(&[
        "oracle", "--eps-f", "0.2", "--eps-m", "0.1", "--n", "2", "--window", "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sum: 1.00000000e0"), "{text}");
}

#[test]
fn oracle_oversized_instance_exit_2() {
    let out = framesync(&[
        "oracle", "--eps-f", "0.2", "--eps-m", "0.1", "--n", "4", "--window", "100",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_reproduces_golden_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = framesync(&[
        "sweep",
        "--config",
        fixture("sweep_golden.conf").to_str().unwrap(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got = fs::read(&path).unwrap();
    let golden = fs::read(fixture("sweep_golden.csv")).unwrap();
    assert_eq!(got, golden, "CSV no longer byte-identical to the fixture");
}

#[test]
fn sweep_invalid_config_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "regime = fixed_power\nbogus = 1\n").unwrap();
    let out = framesync(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn sweep_range_failure_exit_2_with_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("overflow.conf");
    fs::write(
        &cfg,
        "regime = fixed_power\neps_f = 0.1\neps_m = 0.1\nword = all_ones\n\
         N = 3, 64\nr = 2.0\ntrials = 100\nmaster_seed = 1\n",
    )
    .unwrap();
    let csv = dir.path().join("partial.csv");
    let out = framesync(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grid point 2"), "{err}");
    // Header plus the completed first point survive.
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("fixed_power,"));
    assert_eq!(text.lines().nth(1).unwrap().split(',').nth(2), Some("3"));
}

#[test]
fn sweep_trials_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = framesync(&[
        "sweep",
        "--config",
        fixture("sweep_golden.conf").to_str().unwrap(),
        "--out",
        path.to_str().unwrap(),
        "--trials",
        "500",
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(10), Some("500"));
    }
}
