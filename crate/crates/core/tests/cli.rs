use std::fs;
use std::process::Command;

use mwrelay::experiment::{self, ExperimentSpec};

fn mwrelay() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mwrelay"))
}

fn run_ok(args: &[&str], threads: &str) -> String {
    let out = mwrelay().args(args).env("MWRELAY_THREADS", threads).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = [
        "sweep-m", "--k", "5", "--m", "10:30:10", "--trials", "300", "--seed", "4", "--out",
    ];
    run_ok(&[&args[..], &[a.to_str().unwrap()]].concat(), "1");
    run_ok(&[&args[..], &[b.to_str().unwrap()]].concat(), "3");
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(experiment::validate_csv(&text).unwrap() > 0);
}

#[test]
fn csv_header_reproduces_the_run() {
    let text = run_ok(
        &[
            "cdf",
            "--k",
            "4",
            "--m",
            "12",
            "--profiles",
            "8",
            "--trials-per-profile",
            "30",
            "--shadow-db",
            "4",
            "--seed",
            "6",
        ],
        "1",
    );
    let spec = ExperimentSpec::from_csv_header(&text).unwrap();
    let out = experiment::run(&spec).unwrap();
    let mut buf = Vec::new();
    experiment::write_csv(&mut buf, &out.metadata, &out.rows).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), text);
    let p5_rows = text.lines().filter(|l| l.contains(",p5,")).count();
    assert_eq!(p5_rows, 1);
    assert_eq!(text.lines().filter(|l| l.contains(",cdf_sample,")).count(), 8);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "k = 6\nm = 40\npr-db = 5\n").unwrap();
    let text = run_ok(&["bounds-table", "--config", cfg.to_str().unwrap(), "--k", "4"], "1");
    assert!(text.contains("# k = 4\n"));
    assert!(text.contains("# pr-db = 5\n"));
    assert!(text.contains("# m = 40\n"));
}

#[test]
fn beta_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let beta = dir.path().join("beta.txt");
    fs::write(&beta, "0.5\n1\n2\n").unwrap();
    let arg = format!("file:{}", beta.display());
    let text = run_ok(&["bounds-table", "--k", "3", "--m", "20", "--beta", &arg], "1");
    assert!(text.contains(&format!("# beta = {arg}\n")));
    let wrong = mwrelay()
        .args(["bounds-table", "--k", "4", "--m", "20", "--beta", &arg])
        .output()
        .unwrap();
    assert!(!wrong.status.success());
}

#[test]
fn selftest_exits_cleanly() {
    let out = run_ok(&["selftest"], "2");
    assert!(out.lines().all(|l| l.starts_with("[PASS]")));
}

#[test]
fn bad_input_fails_with_a_message() {
    let cases: &[&[&str]] = &[
        &["sweep-m", "--bogus", "1"],
        &["sweep-m", "--k", "1"],
        &["sweep-m", "--m", "10:5:1"],
        &["sweep-m", "--trials", "0"],
        &["sweep-m", "--scheme", "af"],
        &["cdf", "--ploss-exp", "1"],
        &["bounds-table", "--m", "2"],
        &["bounds-table", "--out", "/nonexistent-dir/x.csv"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = mwrelay().args(*args).output().unwrap();
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} gave no diagnostic");
    }
}

#[test]
fn empty_result_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    experiment::write_csv_file(&path, &[], &[]).unwrap();
    assert_eq!(
        fs::read_to_string(&path).unwrap(),
        format!("{}\n", experiment::CSV_HEADER)
    );
}
