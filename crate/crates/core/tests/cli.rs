use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn grid_report_has_four_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.json", r#"{"params": {"log_t": 10000, "cutoff": 2}}"#);
    let out = dir.path().join("g.out.json");
    let o = lab(&["grid", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read(&out);
    assert_eq!(v["results"]["grid"]["capital_l"], 4);
    assert_eq!(v["passed"], true);
    assert!(v["provenance"].as_array().unwrap().iter().all(|c| c["target"].is_string()));
}

#[test]
fn unknown_tag_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"params": {}}"#);
    let out = dir.path().join("never.json");
    let o = lab(&["frobnicate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown experiment"));
    assert!(!out.exists());
}

#[test]
fn schema_errors_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"params": {"n_samples": 5, "colour": "red"}}"#);
    let out = dir.path().join("never.json");
    let o = lab(&["levelset", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour") && err.contains("n_samples") && err.contains("seed"), "{err}");
    assert!(!out.exists());
}

#[test]
fn unknown_config_fields_and_mismatched_tags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"params": {"log_t": 100}, "sede": 3}"#);
    assert_eq!(lab(&["grid", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "d.json", r#"{"experiment": "sieve", "params": {"log_t": 100}}"#);
    assert_eq!(lab(&["grid", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.json", r#"{"params": {"trials": 3000}, "seed": 5}"#);
    let mut results = Vec::new();
    for (i, threads) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("b{i}.json"));
        let o = lab(&[
            "barriers",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        // the results section as canonical text, cut from the file itself
        let start = text.find("\n  \"results\"").unwrap();
        let end = text.find("\n  \"started\"").unwrap();
        results.push(text[start..end].to_string());
    }
    assert_eq!(results[0], results[1]);
    assert_eq!(results[0], results[2]);
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "l.json", r#"{"params": {"n_samples": 1000}, "seed": 1}"#);
    let a = lab(&["levelset", "--config", cfg.to_str().unwrap(), "--seed", "2"]);
    assert_eq!(a.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 2);
}

#[test]
fn failed_hard_check_exits_one_but_writes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", r#"{"params": {"ceiling": 0.1, "trials": 0}, "seed": 1}"#);
    let out = dir.path().join("m.out.json");
    let o = lab(&["moment-bounds", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(read(&out)["passed"], false);
}

#[test]
fn csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", r#"{"params": {"limit": 100}}"#);
    let out = dir.path().join("s.csv");
    let o = lab(&["sieve", "--config", cfg.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("path,value\r\n"));
    assert!(text.contains("results.count,25\r\n"));
}
