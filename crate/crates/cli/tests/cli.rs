use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coinlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coinlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn simulate_into(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["simulate", "--weeks", "30", "--runs", "3", "--seed", "11", "--out", out];
    args.extend_from_slice(extra);
    coinlab(&args)
}

#[test]
fn prints_version() {
    let o = coinlab(&["--version"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn simulate_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate_into(dir.path(), &["--reward", "G"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(dir.path().join("world_reward.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "week,mean_world_reward,std_world_reward,min_world_reward,max_world_reward"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 30);
    for (w, row) in rows.iter().enumerate() {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], w.to_string());
        for f in &fields[1..] {
            assert!(!f.contains('e') && !f.contains('E'), "{f}");
            let digits = f.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count();
            assert!(digits >= 12 || f.trim_start_matches('-').chars().all(|c| c == '0' || c == '.'), "{f}");
        }
    }

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["config"]["reward"], "G");
    assert_eq!(summary["final_week"]["week"], 29);
    assert!(summary.get("convergence_week").is_some());
    assert_eq!(summary["per_run"].as_array().unwrap().len(), 3);
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(simulate_into(a.path(), &[]).status.success());
    assert!(simulate_into(b.path(), &[]).status.success());
    assert_eq!(
        fs::read(a.path().join("world_reward.csv")).unwrap(),
        fs::read(b.path().join("world_reward.csv")).unwrap()
    );
}

#[test]
fn leader_follower_summary_lists_effect_sets() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate_into(
        dir.path(),
        &["--experiment", "leader_follower", "--reward", "WL", "--macrolearning-week", "20"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let sets = summary["per_run"][0]["final_effect_sets"].as_array().unwrap();
    assert_eq!(sets.len(), 56);
    assert_eq!(summary["per_run"][0]["macrolearning_fired"], 20);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "alpha = \"uniform\"\nweeks = 5\nruns = 2\nseed = 3\n").unwrap();
    let out = dir.path().join("out");
    let o = coinlab(&["simulate", "--config", cfg.to_str().unwrap(), "--weeks", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["weeks"], 7);
    assert_eq!(summary["runs"], 2);
    assert_eq!(summary["config"]["alpha"], "uniform");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "colour = 3\n").unwrap();
    let missing = dir.path().join("missing.toml");
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    for args in [
        vec!["simulate", "--config", bad.to_str().unwrap(), "--out", out],
        vec!["simulate", "--config", missing.to_str().unwrap(), "--out", out],
        vec!["simulate", "--reward", "XYZ", "--out", out],
        vec!["simulate", "--experiment", "leader_follower", "--reward", "UD", "--out", out],
        vec!["simulate", "--runs", "0", "--out", out],
        vec!["simulate", "--macrolearning-week", "10", "--out", out],
    ] {
        let o = coinlab(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = coinlab(&["simulate", "--weeks", "2", "--runs", "1", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diagnose_reports_factored_rewards() {
    let o = coinlab(&["diagnose"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["states"], 81);
    for r in report["rewards"].as_array().unwrap() {
        if r["reward"] != "UD" {
            assert_eq!(r["factoredness"], 1.0);
            assert_eq!(r["intelligence_agreement"], 1.0);
        }
    }

    let o = coinlab(&["diagnose", "--experiment", "leader_follower", "--nights", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["nodes"], 6);
    assert_eq!(report["states"], 64);
}
