//! CLI surface contract: exit codes, config-file/flag precedence, manifests.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rules-first"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn CLI")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn unknown_method_exits_2_and_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let res = run(&[
        "curve", "--m", "50", "--trials", "1", "--method", "banana", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr(&res);
    assert!(err.contains("banana"), "stderr: {err}");
    assert!(err.contains("greedy_l2"), "stderr should list valid methods: {err}");
}

#[test]
fn missing_dataset_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&[
        "train",
        "--data",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--out",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn bad_corpus_line_exits_3_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.tsv");
    std::fs::write(&corpus, "+1\tfine start\nno tab here\n").unwrap();
    let res = run(&[
        "threshold",
        "--data",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().join("t.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(stderr(&res).contains('2'.to_string().as_str()), "stderr: {}", stderr(&res));
}

#[test]
fn missing_required_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&[
        "gen",
        "synthetic",
        "--out",
        dir.path().join("d.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("--m"));
}

#[test]
fn config_file_fills_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("d.csv");
    std::fs::write(&cfg, "m = \"150\"\nseed = 9\n").unwrap();
    let res = run(&[
        "gen", "synthetic", "--config", cfg.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stdout(&res).contains("wrote 150 examples"));

    // an explicit flag overrides the same key in the config file
    let res = run(&[
        "gen", "synthetic", "--config", cfg.to_str().unwrap(), "--m", "60", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stdout(&res).contains("wrote 60 examples"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "not_a_known_key = 5\n").unwrap();
    let res = run(&[
        "gen", "synthetic", "--config", cfg.to_str().unwrap(), "--m", "10", "--out",
        dir.path().join("d.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn csv_outputs_carry_schema_version_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kappa.csv");
    let res = run(&[
        "kappa", "--m", "200", "--trials", "1", "--kappa-grid", "0,2", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# rules-first kappa csv v1"), "{text}");
    let manifest = Path::new(&format!("{}.manifest.toml", out.display())).to_path_buf();
    let echo = std::fs::read_to_string(manifest).unwrap();
    assert!(echo.contains("m = 200"), "manifest should echo the config: {echo}");
    assert!(echo.contains("trials = 1"), "{echo}");
}

#[test]
fn train_then_eval_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let model = dir.path().join("m.json");
    let res = run(&[
        "gen", "synthetic", "--m", "300", "--seed", "2", "--out", data.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let res = run(&[
        "train", "--data", data.to_str().unwrap(), "--method", "l2", "--seed", "2",
        "--out", model.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let res = run(&[
        "eval", "--data", data.to_str().unwrap(), "--model", model.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let line = stdout(&res);
    assert!(line.contains("examples=300"), "{line}");
    assert!(line.contains("accuracy="), "{line}");
}
