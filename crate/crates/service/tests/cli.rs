mod common;

use std::path::Path;
use std::process::{Command, Output};

fn navrl(args: &[&str], data_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navrl")).args(args).env("NAVRL_DATA_DIR", data_dir).output().unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_slice(&read(p)).unwrap()
}

#[test]
fn unknown_subcommand_or_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = navrl(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = navrl(&["gen-tree", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--bogus"));
}

#[test]
fn gen_tree_is_reproducible_and_honours_the_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(navrl(&["gen-tree", "--seed", "7", "--out", a.to_str().unwrap()], dir.path()));
    ok(navrl(&["gen-tree", "--seed", "7", "--out", b.to_str().unwrap()], dir.path()));
    for f in ["tree.json", "manifest.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    let m = json(&a.join("manifest.json"));
    assert_eq!(m["command"], "gen-tree");
    assert_eq!(m["seeds"]["tree"], 7);
    assert_eq!(m["config"]["seed"], 7);

    ok(navrl(&["gen-tree", "--seed", "7"], dir.path()));
    assert_eq!(read(&dir.path().join("tree/tree.json")), read(&a.join("tree.json")));
}

#[test]
fn evaluate_without_checkpoint_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (tree, targets) = common::write_inputs(dir.path());
    let out = navrl(&["evaluate", "--tree", tree.to_str().unwrap(), "--targets", targets.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("configuration error: checkpoint"), "{}", stderr(&out));
    let missing = dir.path().join("nope");
    let out = navrl(
        &["evaluate", "--checkpoint", missing.to_str().unwrap(), "--tree", tree.to_str().unwrap(), "--targets", targets.to_str().unwrap()],
        dir.path(),
    );
    assert!(stderr(&out).contains("checkpoint"), "{}", stderr(&out));
}

#[test]
fn invalid_config_reports_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (tree, targets) = common::write_inputs(dir.path());
    let (t, g) = (tree.to_str().unwrap(), targets.to_str().unwrap());
    let out = navrl(&["train-sac", "--tree", t, "--targets", g, "--reward", "shaped"], dir.path());
    assert!(stderr(&out).contains("irl_models"), "{}", stderr(&out));
    let out = navrl(&["train-sac", "--tree", t, "--targets", g, "--eval-interval", "0"], dir.path());
    assert!(stderr(&out).contains("eval_interval"), "{}", stderr(&out));
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"total_steps": "many"}"#).unwrap();
    let out = navrl(&["train-sac", "--tree", t, "--targets", g, "--config", cfg.to_str().unwrap()], dir.path());
    assert!(stderr(&out).contains("configuration error: config"), "{}", stderr(&out));
}

/// Small SAC settings so a full pipeline runs in seconds.
const TINY_SAC: &str = r#"{
  "total_steps": 300, "eval_interval": 150, "eval_episodes": 2,
  "discount": 0.99, "tau": 0.005, "actor_lr": 0.0003, "critic_lr": 0.0003, "temperature_lr": 0.0003,
  "initial_temperature": 0.001, "auto_temperature": true, "target_entropy": -4.0,
  "batch_size": 2, "sequence_length": 8, "burn_in": 2, "replay_capacity": 50,
  "lstm_hidden": 8, "hidden": [16, 16], "prefill_episodes": 0, "update_every": 10,
  "early_stop_success": null, "seed": 3,
  "reward": {"kind": "dense", "alpha": 0.001}, "tracking_mode": "dual"
}"#;

#[test]
fn pipeline_records_alpha_and_reproduces_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s);
    let (tree, targets) = common::write_inputs(dir.path());
    let (t, g) = (tree.to_str().unwrap(), targets.to_str().unwrap());
    std::fs::write(p("tiny.json"), TINY_SAC).unwrap();

    ok(navrl(&["synth-demos", "--tree", t, "--targets", g, "--episodes", "2", "--out", p("demos").to_str().unwrap()], dir.path()));
    ok(navrl(
        &["train-irl", "--demos", p("demos").to_str().unwrap(), "--iterations", "20", "--out", p("irl").to_str().unwrap()],
        dir.path(),
    ));
    assert_eq!(json(&p("irl/manifest.json"))["config"]["irl"]["iterations"], 20);

    let sac = |out: &str| {
        ok(navrl(
            &[
                "train-sac", "--tree", t, "--targets", g, "--config", p("tiny.json").to_str().unwrap(),
                "--reward", "shaped", "--alpha", "0.001", "--irl-models", p("irl").to_str().unwrap(),
                "--targets-per-branch", "2", "--out", p(out).to_str().unwrap(),
            ],
            dir.path(),
        ))
    };
    sac("run1");
    sac("run2");
    let m = json(&p("run1/manifest.json"));
    assert_eq!(m["config"]["sac"]["reward"]["kind"], "shaped");
    assert_eq!(m["config"]["sac"]["reward"]["alpha"], 0.001);
    assert_eq!(m["config"]["targets_per_branch"], 2);
    assert_eq!(m["seeds"]["sac"], 3);
    for f in ["manifest.json", "config.json", "eval.csv", "eval.jsonl", "log.jsonl", "checkpoints/best/log_alpha.json"] {
        assert_eq!(read(&p("run1").join(f)), read(&p("run2").join(f)), "{f}");
    }
    let csv = String::from_utf8(read(&p("run1/eval.csv"))).unwrap();
    assert_eq!(csv.lines().next(), Some("steps,success_rate,procedure_time_s,path_ratio"));
    assert_eq!(csv.lines().count(), 1 + 3);

    let eval = |out: &str| {
        ok(navrl(
            &[
                "evaluate", "--checkpoint", p("run1/checkpoints/best").to_str().unwrap(), "--tree", t, "--targets", g,
                "--eval-episodes", "3", "--targets-per-branch", "2", "--out", p(out).to_str().unwrap(),
            ],
            dir.path(),
        ))
    };
    eval("eval1");
    eval("eval2");
    assert_eq!(read(&p("eval1/eval.jsonl")), read(&p("eval2/eval.jsonl")));
    assert_eq!(String::from_utf8(read(&p("eval1/eval.jsonl"))).unwrap().lines().count(), 3);

    ok(navrl(
        &["report", "--runs", p("run1").to_str().unwrap(), p("run2").to_str().unwrap(), "--out", p("report").to_str().unwrap()],
        dir.path(),
    ));
    let summary = String::from_utf8(read(&p("report/summary.csv"))).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let series = String::from_utf8(read(&p("report/series.csv"))).unwrap();
    assert_eq!(series.lines().count(), 1 + 2 * 3);
    assert!(p("report/ttest.csv").exists());
}

#[test]
fn sample_targets_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (tree, _) = common::write_inputs(dir.path());
    for out in ["t1", "t2"] {
        let o = dir.path().join(out);
        ok(navrl(&["sample-targets", "--tree", tree.to_str().unwrap(), "--seed", "5", "--out", o.to_str().unwrap()], dir.path()));
    }
    assert_eq!(read(&dir.path().join("t1/targets.json")), read(&dir.path().join("t2/targets.json")));
    let sets: Vec<navrl_core::TargetSet> = serde_json::from_slice(&read(&dir.path().join("t1/targets.json"))).unwrap();
    assert_eq!(sets.len(), 2);
}
