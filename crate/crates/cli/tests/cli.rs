//! End-to-end runs of the `clawforge` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn clawforge(home: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clawforge"))
        .env("CLAWFORGE_HOME", home)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn digest(line: &str) -> &str {
    line.rsplit("sha256 ").next().unwrap().trim_end_matches([')', '\n'])
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let first = stdout(&clawforge(dir.path(), &["generate", "--out", a.to_str().unwrap(), "--seed", "3"]));
    let second = stdout(&clawforge(
        dir.path(),
        &["generate", "--out", b.to_str().unwrap(), "--seed", "3", "--jobs", "1"],
    ));
    assert!(first.starts_with("wrote 34 tasks"), "{first}");
    assert_eq!(digest(&first), digest(&second));
    assert_eq!(digest(&first).len(), 64);
    assert_eq!(fs::read_dir(a.join("tasks")).unwrap().count(), 34);
    assert!(a.join("manifest.json").is_file());
    for entry in fs::read_dir(a.join("tasks")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.join("tasks").join(&name)).unwrap(),
            fs::read(b.join("tasks").join(&name)).unwrap()
        );
    }
}

#[test]
fn replay_run_then_report_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap");
    let records = dir.path().join("records.jsonl");
    let report = dir.path().join("report.json");
    stdout(&clawforge(
        dir.path(),
        &["generate", "--out", snap.to_str().unwrap(), "--counts", "all=0,inbox=2,state_repair=1"],
    ));
    let summary = stdout(&clawforge(
        dir.path(),
        &[
            "run",
            "--snapshot",
            snap.to_str().unwrap(),
            "--agent",
            "replay",
            "--out",
            records.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--label",
            "replay",
        ],
    ));
    assert!(summary.starts_with("6 episodes: strict_accuracy 1 mean_partial 1"), "{summary}");
    assert_eq!(fs::read_to_string(&records).unwrap().lines().count(), 6);
    assert!(dir.path().join("runs").is_dir());

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["label"], "replay");
    assert_eq!(json["totals"]["strict_accuracy"], 1.0);

    let r = records.to_str().unwrap();
    let again: serde_json::Value =
        serde_json::from_str(&stdout(&clawforge(dir.path(), &["report", "--records", r, "--format", "json", "--label", "replay"])))
            .unwrap();
    assert_eq!(again, json);
    let csv = stdout(&clawforge(dir.path(), &["report", "--records", r, "--format", "csv"]));
    assert!(csv.starts_with("section,key,metric,value\n"), "{csv}");
    assert!(csv.contains("totals,all,strict_accuracy,1\n"), "{csv}");
    let md = stdout(&clawforge(dir.path(), &["report", "--records", r]));
    assert!(md.contains("## Totals") && md.contains("## By scenario"), "{md}");

    // Appending a second run keeps earlier records.
    stdout(&clawforge(
        dir.path(),
        &["run", "--snapshot", snap.to_str().unwrap(), "--agent", "skip_inspection", "--out", r, "--jobs", "1"],
    ));
    assert_eq!(fs::read_to_string(&records).unwrap().lines().count(), 12);
}

#[test]
fn bad_inputs_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["report".into(), "--records".into(), empty.display().to_string()],
        vec!["report".into(), "--records".into(), dir.path().join("missing").display().to_string()],
        vec![
            "run".into(),
            "--snapshot".into(),
            dir.path().join("nope").display().to_string(),
            "--agent".into(),
            "replay".into(),
            "--out".into(),
            dir.path().join("r.jsonl").display().to_string(),
        ],
        vec!["generate".into(), "--out".into(), dir.path().join("g").display().to_string(), "--counts".into(), "bogus=1".into()],
    ];
    for args in cases {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = clawforge(dir.path(), &argv);
        assert!(!out.status.success(), "{argv:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "), "{argv:?}");
    }
    let out = clawforge(dir.path(), &["run", "--snapshot", "x", "--agent", "telepathic", "--out", "y"]);
    assert!(!out.status.success());
}
