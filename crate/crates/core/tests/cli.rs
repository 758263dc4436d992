mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Duration;

use common::{toy_dataset, MockEndpoint};
use screeneval::eval::{ConsistencyCell, WerRow};
use screeneval::ingest::write_dataset;

fn screeneval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_screeneval"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn synth_into(dir: &Path, subjects: &str) {
    let o = screeneval(&["synth", "--out", dir.to_str().unwrap(), "--seed", "9", "--subjects", subjects]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_1() {
    let o = screeneval(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(screeneval(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(screeneval(&["eval", "consistency", "--bogus"]).status.code(), Some(1));
    assert_eq!(screeneval(&["eval", "consistency"]).status.code(), Some(1), "missing --predictions");
    assert_eq!(screeneval(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let o = screeneval(&["eval", "consistency", "--predictions", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"subject_id\": \"x\", \"hads_a\": 30, \"hads_d\": 1, \"transcripts\": {\"GT\": \"hi\"}}\n").unwrap();
    assert_eq!(screeneval(&["wer", "--dataset", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn config_keys_are_checked_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), "8");
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"format": "json", "colour": "blue"}"#).unwrap();
    let o = screeneval(&["wer", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let data = dir.path().join("dataset.jsonl");
    fs::write(&cfg, format!(r#"{{"format": "json", "dataset": {:?}}}"#, data.to_str().unwrap())).unwrap();
    let o = screeneval(&["wer", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<WerRow> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 3);

    let o = screeneval(&["wer", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert!(stdout(&o).starts_with("Condition,Subjects,WER (%),Deletion rate (%)"));
}

#[test]
fn wer_table_has_deletion_rate() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), "5");
    let data = dir.path().join("dataset.jsonl");
    let out = dir.path().join("w");
    let o = screeneval(&["wer", "--dataset", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--per-subject"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("| Condition | Subjects | WER (%) | Deletion rate (%) |"));
    assert_eq!(text.lines().count(), 2 + 3);
    assert_eq!(fs::read_to_string(out.join("wer.md")).unwrap(), text);
    assert!(out.join("wer_subjects.json").exists());
}

#[test]
fn eval_outputs_and_json_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), "12");
    let p = dir.path().join("predictions.jsonl");
    let d = dir.path().join("dataset.jsonl");
    let (p, d) = (p.to_str().unwrap(), d.to_str().unwrap());

    let o = screeneval(&["eval", "consistency", "--predictions", p, "--format", "md"]);
    assert_eq!(o.status.code(), Some(0));
    let md = stdout(&o);
    assert!(md.starts_with("| Model | HADS | GT | W-Large | W-Med. | W-Small |\n"));
    assert!(md.contains("| oracle | A | **1.000**/1.00 |"));

    let o = screeneval(&["eval", "consistency", "--predictions", p, "--format", "json"]);
    let cells: Vec<ConsistencyCell> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cells.len(), 3 * 4 * 2);
    assert_eq!(screeneval_json_again(&cells), stdout(&o));

    for a in ["validity", "robustness", "keywords", "agreement"] {
        let o = screeneval(&["eval", a, "--predictions", p, "--dataset", d, "--format", "csv"]);
        assert_eq!(o.status.code(), Some(0), "{a}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).lines().count() > 1, "{a}");
    }
}

fn screeneval_json_again(cells: &[ConsistencyCell]) -> String {
    screeneval::eval::canonical_json(&cells)
}

#[test]
fn parse_writes_store_and_exclusions() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), "4");
    let p = dir.path().join("predictions.jsonl");
    let mut text = fs::read_to_string(&p).unwrap();
    text.push_str(r#"{"model":"x","condition":"GT","run":1,"subject_id":"S001","raw":"no json here"}"#);
    text.push('\n');
    fs::write(&p, text).unwrap();
    let out = dir.path().join("parsed");
    let o = screeneval(&["parse", "--predictions", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(out.join("predictions.jsonl")).unwrap().lines().count(), 3 * 4 * 4 * 3);
    let ex = fs::read_to_string(out.join("exclusions.jsonl")).unwrap();
    assert_eq!(ex.lines().count(), 1);
    assert!(ex.contains("NoJsonFound"));
}

#[test]
fn report_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), "20");
    let p = dir.path().join("predictions.jsonl");
    let d = dir.path().join("dataset.jsonl");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}"));
        let o = screeneval(&[
            "report",
            "--predictions",
            p.to_str().unwrap(),
            "--dataset",
            d.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let mut files = BTreeMap::new();
        for e in fs::read_dir(&out).unwrap() {
            let e = e.unwrap();
            files.insert(e.file_name(), fs::read(e.path()).unwrap());
        }
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 9);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn infer_against_mock() {
    let mock = MockEndpoint::start(BTreeMap::new(), Duration::ZERO);
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    write_dataset(&toy_dataset(2), fs::File::create(&data).unwrap()).unwrap();
    let out = dir.path().join("campaign");
    let args = [
        "infer",
        "--endpoint",
        &mock.url,
        "--model",
        "m1",
        "--condition",
        "GT",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let o = screeneval(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["fetched"], 6);
    let o = screeneval(&args);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["fetched"], 0);
    assert_eq!(summary["already_done"], 6);

    assert_eq!(screeneval(&["infer", "--dataset", data.to_str().unwrap()]).status.code(), Some(1));
}
