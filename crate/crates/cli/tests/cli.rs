use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sample() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample/corpus.json")
}

fn vqakit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqakit"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Vec<Value> {
    let out = vqakit(dir, args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{args:?}: {stderr}");
    stderr.lines().map(|l| serde_json::from_str(l).expect("log lines are JSON")).collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let s = sample();
    let s = s.to_str().unwrap();
    let logs = ok(dir.path(), &["generate", "--in", s, "--out", "a.json", "--seed", "7"]);
    ok(dir.path(), &["generate", "--in", s, "--out", "b.json", "--seed", "7"]);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let log = logs.iter().find(|l| l["event"] == "generate").unwrap();
    assert!(log["pairs_out"].as_u64().unwrap() > 0);
    assert!(log["rule_firings"]["invert"].as_u64().unwrap() > 0);
    let qa = read_json(&dir.path().join("a.json"));
    let questions: Vec<&str> = qa["qa_pairs"].as_array().unwrap().iter().map(|p| p["question"].as_str().unwrap()).collect();
    assert!(questions.contains(&"Does microscopy show coagulative necrosis of the affected bowel wall and thrombosed vessels?"));
    assert!(questions.contains(&"What of the affected bowel wall and thrombosed vessels does microscopy show?"));
}

#[test]
fn split_uses_ratios_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let s = sample();
    let args = ["split", "--in", s.to_str().unwrap(), "--out", "split.json", "--ratios", "0.5,0.3,0.2", "--seed", "1"];
    ok(dir.path(), &args);
    let split = read_json(&dir.path().join("split.json"));
    let sizes: Vec<usize> = ["train", "val", "test"].iter().map(|k| split[k].as_array().unwrap().len()).collect();
    assert_eq!(sizes, [5, 3, 2]);
    let first = std::fs::read(dir.path().join("split.json")).unwrap();
    ok(dir.path(), &args);
    assert_eq!(first, std::fs::read(dir.path().join("split.json")).unwrap());
}

#[test]
fn pipeline_stages_compose() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = sample();
    ok(d, &["validate", "--in", s.to_str().unwrap()]);
    ok(d, &["simplify", "--in", s.to_str().unwrap(), "--out", "simple.json"]);
    let simple = read_json(&d.join("simple.json"));
    assert!(simple.as_array().unwrap().iter().any(|c| c["rule"] == "R1"));
    ok(d, &["generate", "--in", s.to_str().unwrap(), "--out", "qa.json", "--traces", "traces.jsonl"]);
    let logs = ok(d, &["assemble", "--in", "qa.json", "--out", "plain.json"]);
    let balance = &logs.iter().find(|l| l["event"] == "assemble").unwrap()["balance"];
    assert_eq!(balance["skipped"], true);
    let logs = ok(d, &["assemble", "--in", "qa.json", "--out", "asm.json", "--balance"]);
    let balance = &logs.iter().find(|l| l["event"] == "assemble").unwrap()["balance"];
    assert_eq!(balance["balanced"], true);
    ok(d, &["validate", "--in", "asm.json"]);
    ok(d, &["split", "--in", "asm.json", "--out", "split.json", "--corpus-out", "final.json"]);
    ok(d, &["stats", "--in", "final.json", "--out", "stats.json", "--table", "stats.txt", "--answers-csv", "answers.csv"]);
    let stats = read_json(&d.join("stats.json"));
    assert_eq!(stats["images"], 10);
    assert!(std::fs::read_to_string(d.join("stats.txt")).unwrap().contains("words per question"));
    assert!(std::fs::read_to_string(d.join("answers.csv")).unwrap().starts_with("rank,answer,count"));
    let traces = std::fs::read_to_string(d.join("traces.jsonl")).unwrap();
    let first: Value = serde_json::from_str(traces.lines().next().unwrap()).unwrap();
    assert!(first["trace"]["steps"].as_array().is_some());
}

#[test]
fn eval_reports_all_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gold = r#"[
      {"qa_id":"a","image_id":"i","qtype":"what","question":"What does it show?","answer":"necrosis",
       "provenance":{"caption_id":"c","sentence_index":0,"rule_id":"open_what"},"status":"accepted"},
      {"qa_id":"b","image_id":"i","qtype":"yes_no","question":"Does it show necrosis?","answer":"yes",
       "provenance":{"caption_id":"c","sentence_index":0,"rule_id":"yes_no"},"status":"accepted"}
    ]"#;
    std::fs::write(d.join("gold.json"), gold).unwrap();
    std::fs::write(d.join("pred.json"), r#"[{"qa_id":"a","answer":"coagulative necrosis"},{"qa_id":"b","answer":"yes"}]"#).unwrap();
    ok(d, &["eval", "--gold", "gold.json", "--pred", "pred.json", "--out", "report.json", "--table", "report.txt"]);
    let r = read_json(&d.join("report.json"));
    assert_eq!(r["accuracy_yesno"], 1.0);
    assert_eq!(r["exact_match"], 0.0);
    assert!((r["macro_f1"].as_f64().unwrap() - 200.0 / 3.0).abs() < 1e-9);
    assert!((r["bleu"]["1"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!(std::fs::read_to_string(d.join("report.txt")).unwrap().contains("BLEU-1"));
}

#[test]
fn export_applies_journal() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = sample();
    ok(d, &["generate", "--in", s.to_str().unwrap(), "--out", "qa.json"]);
    let qa = read_json(&d.join("qa.json"));
    let ids: Vec<&str> = qa["qa_pairs"].as_array().unwrap().iter().map(|p| p["qa_id"].as_str().unwrap()).collect();
    let journal = format!(
        "{{\"qa_id\":\"{}\",\"action\":\"accept\",\"timestamp_ms\":1}}\n{{\"qa_id\":\"{}\",\"action\":\"edit\",\"edited_answer\":\"The lumen\",\"timestamp_ms\":2}}\n{{\"qa_id\":\"{}\",\"action\":\"reject\",\"timestamp_ms\":3}}\n",
        ids[0], ids[2], ids[3]
    );
    std::fs::write(d.join("qa.review.jsonl"), journal).unwrap();
    ok(d, &["export", "--in", "qa.json", "--out", "reviewed.json"]);
    let out = read_json(&d.join("reviewed.json"));
    let pairs = out["qa_pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 2);
    assert_eq!(pairs[1]["answer"], "lumen");
    ok(d, &["export", "--in", "qa.json", "--out", "all.json", "--include", "generated,accepted,edited"]);
    assert_eq!(read_json(&d.join("all.json"))["qa_pairs"].as_array().unwrap().len(), ids.len() - 1);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = sample();
    std::fs::write(d.join("run.json"), r#"{"seed": 3, "ratios": [0.6, 0.2, 0.2]}"#).unwrap();
    ok(d, &["--config", "run.json", "split", "--in", s.to_str().unwrap(), "--out", "a.json"]);
    ok(d, &["split", "--in", s.to_str().unwrap(), "--out", "b.json", "--seed", "3", "--ratios", "0.6,0.2,0.2"]);
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    assert_eq!(read_json(&d.join("a.json"))["train"].as_array().unwrap().len(), 6);
    ok(d, &["--config", "run.json", "split", "--in", s.to_str().unwrap(), "--out", "c.json", "--ratios", "0.5,0.3,0.2"]);
    assert_eq!(read_json(&d.join("c.json"))["train"].as_array().unwrap().len(), 5);
    std::fs::write(d.join("bad.json"), r#"{"sed": 3}"#).unwrap();
    assert_eq!(vqakit(d, &["--config", "bad.json", "validate", "--in", s.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn exit_codes_and_cleanup() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(vqakit(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(vqakit(d, &["--help"]).status.code(), Some(0));
    assert_eq!(vqakit(d, &["split", "--in", "x.json", "--out", "y.json", "--ratios", "1,2"]).status.code(), Some(1));
    std::fs::write(d.join("broken.json"), r#"{"images": [], "captions": [{"caption_id": "c", "image_id": "nope", "raw_text": "", "sentences": []}]}"#).unwrap();
    let out = vqakit(d, &["validate", "--in", "broken.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dangling image reference"));
    assert_eq!(vqakit(d, &["validate", "--in", "missing.json"]).status.code(), Some(2));
    // a later artifact cannot be written: earlier ones are removed
    let s = sample();
    let out = vqakit(d, &["stats", "--in", s.to_str().unwrap(), "--out", "stats.json", "--table", "no/such/dir/t.txt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!d.join("stats.json").exists());
}
