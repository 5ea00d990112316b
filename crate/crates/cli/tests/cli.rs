use std::process::{Command, Output};

use roundrank_core::ResultRecord;

fn roundrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roundrank"))
        .args(args)
        .env_remove("ROUNDRANK_SEED")
        .output()
        .unwrap()
}

fn records(out: &Output) -> Vec<ResultRecord> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn all_pairs_on_five_items() {
    let out = roundrank(&["run", "--algo", "one_round_sorted_topk", "--n", "5", "--k", "3", "--trials", "3"]);
    assert!(out.status.success());
    let recs = records(&out);
    assert_eq!(recs.len(), 3);
    for r in recs {
        assert_eq!(r.total_comparisons, 10);
        assert_eq!(r.comparisons_per_round, vec![10]);
        assert!(r.correct && !r.halted);
        assert_eq!(r.p, 1.0);
        assert_eq!(r.wall_ms, None);
    }
}

#[test]
fn zero_trials_is_empty_success() {
    let out = roundrank(&["run", "--algo", "rsorted1", "--n", "50", "--trials", "0"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["run", "--algo", "nope"][..],
        &["run", "--n", "10"],
        &["run", "--algo", "rsorted1", "--n", "10", "--k", "11"],
        &["run", "--algo", "one_round_topk", "--n", "10", "--noise", "bernoulli", "--p", "0.4"],
        &["run", "--algo", "rsorted1", "--jobs", "0"],
        &["run", "--algo", "rsorted1", "--config", "/nonexistent.toml"],
        &["sweep", "--algo", "rsorted1", "--grid", "64,128"],
        &["verify", "--suite", "bogus"],
        &["frobnicate"],
    ] {
        assert_eq!(roundrank(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn flag_seed_beats_environment() {
    let base = ["run", "--algo", "rsorted2", "--n", "200", "--k", "20", "--r", "3", "--trials", "2"];
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_roundrank"));
        c.args(base).env_remove("ROUNDRANK_SEED");
        if let Some(e) = env {
            c.env("ROUNDRANK_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("9"), None), run(None, Some("9")));
    assert_eq!(run(Some("5"), Some("9")), run(None, Some("9")));
    assert_ne!(run(None, Some("5")), run(None, Some("9")));
}

#[test]
fn config_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("records.jsonl");
    std::fs::write(&cfg, "algorithm = \"noiseless_dispatch\"\nn = 300\nk = \"n/10\"\nr = 3\ntrials = 4\nseed = 12\n").unwrap();
    let res = roundrank(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--timing"]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("successes=4"));
    let text = std::fs::read_to_string(&out).unwrap();
    let recs: Vec<ResultRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 4);
    assert!(recs.iter().all(|r| r.k == 30 && r.correct && r.wall_ms.is_some()));
}

#[test]
fn sweep_writes_csv_and_fit() {
    let out = roundrank(&["sweep", "--algo", "rsorted1", "--r", "2", "--k", "n", "--trials", "3", "--grid", "64,128,256"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("n,k,trials,successes"));
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("# k=n slope="));
}

#[test]
fn oracle_suite_passes() {
    let out = roundrank(&["verify", "--suite", "oracle"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 failed"));
}
