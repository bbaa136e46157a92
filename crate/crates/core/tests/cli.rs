use std::path::Path;
use std::process::{Command, Output};

fn potrend(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_potrend")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &Path) -> String {
    let out = potrend(&["synth", "--out", dir.to_str().unwrap(), "--set", "synth.weeks=60"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir.join("pipeline.toml").to_str().unwrap().to_string()
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    synth(&a);
    synth(&b);
    for name in ["news.jsonl", "prices.csv", "truth.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn run_then_trajectory_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth(dir.path());
    let out = potrend(&["--config", &config, "run"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 8, "{stdout}");
    let out = potrend(&["--config", &config, "pot", "--word", "coronavirus", "--from", "2015-06", "--to", "2015-09"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("work/trajectory_coronavirus.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("2015-06-"), "{csv}");
    assert!(csv.lines().last().unwrap().starts_with("2015-09-"), "{csv}");
}

#[test]
fn usage_and_config_errors_exit_1() {
    for args in [
        vec!["nosuchcommand"],
        vec!["pot", "--word", "x"],
        vec!["show-config", "--set", "pot.lagz=3"],
        vec!["show-config", "--set", "extractor.lambda=7"],
        vec!["--config", "/nonexistent/pipeline.toml", "ingest"],
        vec!["pot", "--word", "x", "--from", "2020-05", "--to", "2020-01"],
        vec!["pot", "--word", "x", "--from", "May", "--to", "2020-01"],
    ] {
        let out = potrend(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let work = format!("paths.workdir={}", dir.path().join("work").display());
    let news = format!("paths.news={}", dir.path().join("missing.jsonl").display());
    let out = potrend(&["ingest", "--set", &work, "--set", &news]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error: "), "{}", stderr(&out));
    let out = potrend(&["score", "--set", &work]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("ingest") || stderr(&out).contains("pot"), "{}", stderr(&out));
}

#[test]
fn help_and_show_config_exit_0() {
    assert_eq!(code(&potrend(&["--help"])), 0);
    assert_eq!(code(&potrend(&["--version"])), 0);
    let out = potrend(&["show-config", "--set", "pot.lags=3"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("lags = 3"));
}
