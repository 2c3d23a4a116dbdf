use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defitex"))
        .args(args)
        .env("DEFITEX_LOG", "error")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Scans, extracts and builds a corpus into `out`.
fn pipeline(root: &Path, out: &Path) {
    let meta = fixtures().join("times.tsv");
    for args in [
        vec!["scan", "--root", s(root), "--metadata", s(&meta)],
        vec!["extract"],
        vec!["build"],
    ] {
        let mut full = vec!["-q", "--out-dir", s(out)];
        full.extend(args);
        let o = run(&full);
        assert!(o.status.success(), "{full:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

fn small_corpus(dir: &Path, papers: &[(&str, &str)]) -> PathBuf {
    let root = dir.join("corpus");
    for (id, body) in papers {
        let doc = format!("\\documentclass{{article}}\n\\begin{{document}}\n{body}\n\\end{{document}}\n");
        write(&root.join(id).join("main.tex"), &doc);
    }
    root
}

#[test]
fn scan_writes_manifest() {
    let tmp = TempDir::new().unwrap();
    let root = small_corpus(
        tmp.path(),
        &[("a", "x"), ("b", "y"), ("c", "z")],
    );
    let out = tmp.path().join("m.json");
    let o = run(&["scan", "--root", s(&root), "--out", s(&out), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stderr.is_empty(), "quiet run printed {:?}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 3);
    let sidecar = lines(&tmp.path().join("m.warnings.jsonl"));
    assert_eq!(sidecar.len(), 3);
    assert_eq!(sidecar[0]["kind"], "timestamp-fallback");

    let loud = run(&["scan", "--root", s(&root), "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&loud.stderr).contains("3 warnings"));
}

#[test]
fn scan_missing_root_is_io_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["--out-dir", s(tmp.path()), "scan", "--root", s(&tmp.path().join("nope"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not exist"));
}

#[test]
fn scan_bad_metadata_is_schema_error() {
    let tmp = TempDir::new().unwrap();
    let root = small_corpus(tmp.path(), &[("a", "x")]);
    let meta = tmp.path().join("t.tsv");
    write(&meta, "a\tnot-a-date\n");
    let o = run(&["--out-dir", s(tmp.path()), "scan", "--root", s(&root), "--metadata", s(&meta)]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn extract_finds_spread_and_components() {
    let tmp = TempDir::new().unwrap();
    pipeline(&fixtures().join("corpus"), tmp.path());
    let defs = lines(&tmp.path().join("definitions.jsonl"));
    let fig = defs.iter().find(|d| d["paper_id"] == "1303.0417").unwrap();
    let terms: Vec<&str> = fig["spans"].as_array().unwrap().iter().map(|s| s["term"].as_str().unwrap()).collect();
    assert_eq!(terms, ["spread", "components"]);
    let raw = fs::read_to_string(tmp.path().join("definitions.jsonl")).unwrap();
    assert!(raw.starts_with("{\"paper_id\":"));
    assert_eq!(fig["last_updated"], "2013-03-02T11:20:00Z");
}

#[test]
fn extract_without_definitions_exits_3() {
    let tmp = TempDir::new().unwrap();
    let root = small_corpus(tmp.path(), &[("a", "\\begin{theorem}x\\end{theorem}")]);
    let out = tmp.path().join("w");
    assert!(run(&["-q", "--out-dir", s(&out), "scan", "--root", s(&root)]).status.success());
    let o = run(&["-q", "--out-dir", s(&out), "extract"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(fs::read_to_string(out.join("definitions.jsonl")).unwrap(), "");
}

#[test]
fn extract_env_flag_adds_environments() {
    let tmp = TempDir::new().unwrap();
    let root = small_corpus(
        tmp.path(),
        &[("a", "\\begin{definition}A \\emph{tree}.\\end{definition}\n\\begin{Def}A \\emph{leaf}.\\end{Def}")],
    );
    let out = tmp.path().join("w");
    assert!(run(&["-q", "--out-dir", s(&out), "scan", "--root", s(&root)]).status.success());
    assert!(run(&["-q", "--out-dir", s(&out), "extract"]).status.success());
    assert_eq!(lines(&out.join("definitions.jsonl")).len(), 1);
    assert!(run(&["-q", "--out-dir", s(&out), "extract", "--env", "Def"]).status.success());
    let defs = lines(&out.join("definitions.jsonl"));
    assert_eq!(defs.len(), 2);
    assert_eq!(defs[1]["spans"][0]["term"], "leaf");
}

#[test]
fn extract_symbol_override() {
    let tmp = TempDir::new().unwrap();
    let root = small_corpus(tmp.path(), &[("a", "\\begin{definition}A \\emph{\\Gph-minor}.\\end{definition}")]);
    let table = tmp.path().join("sym.json");
    write(&table, r#"{"\\Gph": "𝒢"}"#);
    let out = tmp.path().join("w");
    assert!(run(&["-q", "--out-dir", s(&out), "scan", "--root", s(&root)]).status.success());
    assert!(run(&["-q", "--out-dir", s(&out), "extract", "--symbols", s(&table)]).status.success());
    assert_eq!(lines(&out.join("definitions.jsonl"))[0]["spans"][0]["term"], "𝒢-minor");
}

fn definitions_file(dir: &Path, texts: &[(&str, &[(usize, usize)])]) -> PathBuf {
    let path = dir.join("definitions.jsonl");
    let mut out = String::new();
    for (i, (text, spans)) in texts.iter().enumerate() {
        let spans: Vec<Value> = spans
            .iter()
            .map(|&(a, b)| serde_json::json!({"start": a, "end": b, "term": text.chars().skip(a).take(b - a).collect::<String>()}))
            .collect();
        let rec = serde_json::json!({
            "paper_id": "p", "block_index": i, "latex": "", "optional_arg": null,
            "text": text, "spans": spans, "last_updated": "2020-01-01T00:00:00Z"
        });
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    write(&path, &out);
    path
}

#[test]
fn build_max_tokens_and_drop_empty() {
    let tmp = TempDir::new().unwrap();
    let twelve = "one two three four five six seven eight nine ten eleven twelve";
    definitions_file(tmp.path(), &[(twelve, &[(0, 3)]), ("a tree here", &[(2, 6)]), ("no terms", &[])]);
    let o = run(&["-q", "--out-dir", s(tmp.path()), "build", "--max-tokens", "10"]);
    assert!(o.status.success());
    let stats: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("build_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["dropped_over_length"], 1);
    assert_eq!(lines(&tmp.path().join("dataset.jsonl")).len(), 2);

    assert!(run(&["-q", "--out-dir", s(tmp.path()), "build", "--max-tokens", "10", "--drop-empty"]).status.success());
    let data = lines(&tmp.path().join("dataset.jsonl"));
    assert_eq!(data.len(), 1);
    assert_eq!(data[0]["tags"], serde_json::json!(["O", "B-MATH_TERM", "O"]));
    let raw = fs::read_to_string(tmp.path().join("dataset.jsonl")).unwrap();
    assert!(raw.starts_with("{\"id\":\"p#1\",\"tokens\":"));
    let conll = fs::read_to_string(tmp.path().join("dataset.conll")).unwrap();
    assert_eq!(conll, "# id = p#1\na\tO\ntree\tB-MATH_TERM\nhere\tO\n\n");
}

#[test]
fn build_malformed_line_exits_4() {
    let tmp = TempDir::new().unwrap();
    let path = definitions_file(tmp.path(), &[("a tree", &[(2, 6)])]);
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{\"paper_id\": 1}\n");
    fs::write(&path, text).unwrap();
    let o = run(&["-q", "--out-dir", s(tmp.path()), "build"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn build_filter_file_replaces_defaults() {
    let tmp = TempDir::new().unwrap();
    definitions_file(tmp.path(), &[("i.e. a tree", &[(0, 4), (7, 11)])]);
    let filter = tmp.path().join("noise.txt");
    write(&filter, "[custom]\ntree\n");
    assert!(run(&["-q", "--out-dir", s(tmp.path()), "build", "--filter", s(&filter)]).status.success());
    assert_eq!(lines(&tmp.path().join("dataset.jsonl"))[0]["terms"], serde_json::json!(["i.e."]));
}

fn fixture_dataset(tmp: &TempDir) -> PathBuf {
    pipeline(&fixtures().join("corpus"), tmp.path());
    tmp.path().join("dataset.jsonl")
}

#[test]
fn split_corrections_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let dataset = fixture_dataset(&tmp);
    let a = tmp.path().join("a");
    assert!(run(&["-q", "--out-dir", s(&a), "split", "--dataset", s(&dataset)]).status.success());
    let spec: Value = serde_json::from_str(&fs::read_to_string(a.join("splits.json")).unwrap()).unwrap();
    let test: Vec<&str> = spec["test"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(test.len(), 1024);
    assert_eq!(spec["seed"], 42);

    let fixes = tmp.path().join("fixes.jsonl");
    let mut text: String = test[..25].iter().map(|id| format!("{{\"id\":\"{id}\",\"action\":\"drop\"}}\n")).collect();
    text.push_str(&format!("{{\"id\":\"{}\",\"action\":\"replace\",\"terms\":[]}}\n", test[30]));
    write(&fixes, &text);
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for dir in [&b, &c] {
        let o = run(&["-q", "--out-dir", s(dir), "split", "--dataset", s(&dataset), "--corrections", s(&fixes)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let gt = lines(&b.join("ground_truth.jsonl"));
    assert_eq!(gt.len(), 999);
    let replaced = gt.iter().find(|e| e["id"] == test[30]).unwrap();
    assert_eq!(replaced["terms"], serde_json::json!([]));
    for f in ["splits.json", "subsamples.json", "ground_truth.jsonl"] {
        assert_eq!(fs::read(b.join(f)).unwrap(), fs::read(c.join(f)).unwrap(), "{f}");
    }

    let other = tmp.path().join("seed7");
    assert!(run(&["-q", "--out-dir", s(&other), "split", "--dataset", s(&dataset), "--seed", "7"]).status.success());
    assert_ne!(fs::read(a.join("splits.json")).unwrap(), fs::read(other.join("splits.json")).unwrap());
}

#[test]
fn split_unknown_correction_exits_4() {
    let tmp = TempDir::new().unwrap();
    definitions_file(tmp.path(), &[("a tree", &[(2, 6)]), ("a leaf", &[(2, 6)]), ("a root", &[(2, 6)])]);
    assert!(run(&["-q", "--out-dir", s(tmp.path()), "build"]).status.success());
    let fixes = tmp.path().join("fixes.jsonl");
    write(&fixes, "{\"id\":\"ghost#3\",\"action\":\"drop\"}\n");
    let o = run(&["-q", "--out-dir", s(tmp.path()), "split", "--test-size", "1", "--folds", "2", "--corrections", s(&fixes)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ghost#3"));
}

#[test]
fn split_too_few_examples_for_folds() {
    let tmp = TempDir::new().unwrap();
    definitions_file(tmp.path(), &[("a tree", &[(2, 6)])]);
    assert!(run(&["-q", "--out-dir", s(tmp.path()), "build"]).status.success());
    let o = run(&["-q", "--out-dir", s(tmp.path()), "split"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["-q", "--out-dir", s(tmp.path()), "split", "--folds", "1"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    let texts: Vec<String> = (0..12).map(|i| format!("term{i} here")).collect();
    let specs: Vec<(&str, &[(usize, usize)])> = texts.iter().map(|t| (t.as_str(), &[][..])).collect();
    definitions_file(tmp.path(), &specs);
    assert!(run(&["-q", "--out-dir", s(tmp.path()), "build"]).status.success());
    let cfg = tmp.path().join("cfg.json");
    write(&cfg, r#"{"test_size": 2, "folds": 5, "seed": 7, "subsample_sizes": [3]}"#);
    let read_spec = || -> Value { serde_json::from_str(&fs::read_to_string(tmp.path().join("splits.json")).unwrap()).unwrap() };

    assert!(run(&["-q", "--config", s(&cfg), "--out-dir", s(tmp.path()), "split"]).status.success());
    let spec = read_spec();
    assert_eq!((spec["seed"].as_u64(), spec["test"].as_array().unwrap().len()), (Some(7), 2));
    assert_eq!(spec["folds"].as_array().unwrap().len(), 5);

    assert!(run(&["-q", "--config", s(&cfg), "--out-dir", s(tmp.path()), "split", "--seed", "9", "--folds", "2"]).status.success());
    let spec = read_spec();
    assert_eq!(spec["seed"], 9);
    assert_eq!(spec["folds"].as_array().unwrap().len(), 2);

    write(&cfg, r#"{"bogus": 1}"#);
    let o = run(&["-q", "--config", s(&cfg), "--out-dir", s(tmp.path()), "split"]);
    assert_eq!(o.status.code(), Some(4));
}

fn gold(dir: &Path) -> PathBuf {
    let path = dir.join("gt.jsonl");
    write(
        &path,
        concat!(
            r#"{"id":"p#0","tokens":["a","Spread","and","spread"],"tags":["O","B-MATH_TERM","O","B-MATH_TERM"],"terms":["Spread","spread"],"last_updated":null}"#,
            "\n",
            r#"{"id":"p#1","tokens":["graph","coloring"],"tags":["B-MATH_TERM","I-MATH_TERM"],"terms":["graph coloring"],"last_updated":"2020-01-01T00:00:00Z"}"#,
            "\n"
        ),
    );
    path
}

#[test]
fn oracle_then_evaluate_is_perfect() {
    let tmp = TempDir::new().unwrap();
    let gt = gold(tmp.path());
    let preds = tmp.path().join("pred.jsonl");
    assert!(run(&["oracle", "--ground-truth", s(&gt), "--out", s(&preds)]).status.success());
    let p = lines(&preds);
    assert_eq!(p.len(), 2);
    assert_eq!(p[0]["terms"], serde_json::json!(["spread"]));
    let report = tmp.path().join("r.json");
    let detail = tmp.path().join("d.jsonl");
    let o = run(&[
        "evaluate", "--ground-truth", s(&gt), "--predictions", s(&preds), "--out", s(&report), "--per-example", s(&detail),
    ]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "P=1.0000 R=1.0000 F1=1.0000");
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("\"f1\": 1.0000"));
    assert!(text.contains("\"dedup_extracted\": true"));
    assert_eq!(lines(&detail).len(), 2);
}

#[test]
fn oracle_on_empty_dataset() {
    let tmp = TempDir::new().unwrap();
    let gt = tmp.path().join("empty.jsonl");
    write(&gt, "");
    let out = tmp.path().join("p.jsonl");
    assert!(run(&["oracle", "--ground-truth", s(&gt), "--out", s(&out)]).status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
    let o = run(&["-q", "evaluate", "--ground-truth", s(&gt), "--predictions", s(&out), "--out", s(&tmp.path().join("r"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn evaluate_id_problems_exit_5() {
    let tmp = TempDir::new().unwrap();
    let gt = gold(tmp.path());
    let preds = tmp.path().join("pred.jsonl");
    let out = tmp.path().join("r.json");
    write(&preds, "{\"id\":\"p#0\",\"terms\":[]}\n{\"id\":\"q#5\",\"terms\":[]}\n");
    let o = run(&["evaluate", "--ground-truth", s(&gt), "--predictions", s(&preds), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q#5"));
    write(&preds, "{\"id\":\"p#0\",\"terms\":[]}\n{\"id\":\"p#0\",\"terms\":[]}\n");
    let o = run(&["evaluate", "--ground-truth", s(&gt), "--predictions", s(&preds), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn evaluate_schema_problems_exit_4() {
    let tmp = TempDir::new().unwrap();
    let gt = gold(tmp.path());
    let preds = tmp.path().join("pred.jsonl");
    write(&preds, "{\"id\":\"p#0\",\"terms\":\"spread\"}\n");
    let o = run(&["evaluate", "--ground-truth", s(&gt), "--predictions", s(&preds), "--out", s(&tmp.path().join("r"))]);
    assert_eq!(o.status.code(), Some(4));
    let bad_gt = tmp.path().join("bad.jsonl");
    write(&bad_gt, r#"{"id":"x#0","tokens":["a"],"tags":["I-MATH_TERM"],"terms":[],"last_updated":null}"#);
    let o = run(&["evaluate", "--ground-truth", s(&bad_gt), "--predictions", s(&preds), "--out", s(&tmp.path().join("r"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn evaluate_missing_predictions_count_as_empty() {
    let tmp = TempDir::new().unwrap();
    let gt = gold(tmp.path());
    let preds = tmp.path().join("pred.jsonl");
    write(&preds, "{\"id\":\"p#1\",\"terms\":[\"coloring\"]}\n");
    let out = tmp.path().join("r.json");
    assert!(run(&["-q", "evaluate", "--ground-truth", s(&gt), "--predictions", s(&preds), "--out", s(&out)]).status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["n_expected"], 2);
    assert_eq!(v["cut_off"], 1);
    assert_eq!(v["tp_split"], 0);
}

#[test]
fn evaluate_aggregate_directory() {
    let tmp = TempDir::new().unwrap();
    let gt = gold(tmp.path());
    let runs = tmp.path().join("runs");
    write(&runs.join("fold0.jsonl"), "{\"id\":\"p#0\",\"terms\":[\"spread\"]}\n{\"id\":\"p#1\",\"terms\":[\"graph coloring\"]}\n");
    write(&runs.join("fold1.jsonl"), "{\"id\":\"p#0\",\"terms\":[\"spread\"]}\n");
    write(&runs.join("notes.txt"), "ignored");
    let out = tmp.path().join("agg.json");
    let o = run(&["-q", "evaluate", "--ground-truth", s(&gt), "--aggregate", s(&runs), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["n_runs"], 2);
    assert_eq!(v["recall"]["mean"].as_f64(), Some(0.75));
    assert!(v["f1"]["std"].as_f64().unwrap() > 0.0);
}

#[test]
fn stats_summarizes_dataset() {
    let tmp = TempDir::new().unwrap();
    let gt = gold(tmp.path());
    let o = run(&["stats", "--dataset", s(&gt)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["examples"], 2);
    assert_eq!(v["tokens_max"], 4);
    assert_eq!(v["unique_terms"], 2);
    assert_eq!(v["tags"]["I-MATH_TERM"], 1);
}
