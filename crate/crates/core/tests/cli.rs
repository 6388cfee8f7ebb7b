mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{Reply, Stub};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chartthinker"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CHARTTHINKER_API_KEY")
        .output()
        .expect("spawn chartthinker")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn corpus_with_library(dir: &Path) {
    assert_ok(&cli(
        &["--seed", "4", "--out", "corpus", "dataset", "gen", "--count", "12"],
        dir,
    ));
    assert_ok(&cli(
        &["--out", "lib.jsonl", "build-library", "corpus/library_entries.jsonl"],
        dir,
    ));
}

#[test]
fn generate_index_and_summarize_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus_with_library(d);
    assert!(d.join("corpus/manifest.jsonl").exists());
    assert!(d.join("corpus/charts/chart-0000.json").exists());

    let run = |out: &str| {
        let o = cli(
            &[
                "--seed",
                "11",
                "--out",
                out,
                "summarize",
                "--manifest",
                "corpus/manifest.jsonl",
                "--library",
                "lib.jsonl",
            ],
            d,
        );
        assert_ok(&o);
        std::fs::read(d.join(out)).unwrap()
    };
    let a = run("a.json");
    let b = run("b.json");
    assert_eq!(a, b);
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let items = doc.as_array().expect("array of results");
    assert_eq!(items.len(), 12);
    assert!(items
        .iter()
        .all(|r| r["summary"].as_str().is_some_and(|s| !s.is_empty())));
}

#[test]
fn summarize_single_spec_with_stage_subset() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus_with_library(d);
    let o = cli(
        &[
            "--json",
            "summarize",
            "--spec",
            "corpus/charts/chart-0001.json",
            "--library",
            "lib.jsonl",
            "--stages",
            "chart_type,trend",
        ],
        d,
    );
    assert_ok(&o);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let stages: Vec<&str> = doc["thoughts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["chart_type", "trend"]);
}

#[test]
fn retrieve_with_oversized_k_returns_whole_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus_with_library(d);
    let o = cli(
        &[
            "--json",
            "retrieve",
            "--library",
            "lib.jsonl",
            "--spec",
            "corpus/charts/chart-0000.json",
            "--stage",
            "axes",
            "--k",
            "500",
        ],
        d,
    );
    assert_ok(&o);
    let hits: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let hits = hits.as_array().unwrap();
    assert_eq!(hits.len(), 12);
    assert_eq!(hits[0]["id"], "chart-0000-axes");
    let sims: Vec<f64> = hits.iter().map(|h| h["similarity"].as_f64().unwrap()).collect();
    assert!(sims.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn identical_hypothesis_scores_full_marks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let line = serde_json::json!({
        "id": "a",
        "hypothesis": "Sales rose to 12 in 2020 and fell to 7 in 2021 .",
        "references": ["Sales rose to 12 in 2020 and fell to 7 in 2021 ."],
        "gold_facts": [{"label": "Sales", "x": "2020", "value": 12.0}, {"label": "Sales", "x": "2021", "value": 7.0}]
    });
    std::fs::write(d.join("eval.jsonl"), format!("{line}\n")).unwrap();
    let o = cli(&["--json", "evaluate", "eval.jsonl"], d);
    assert_ok(&o);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let report = &doc[0]["report"];
    assert!((report["bleu"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    assert!((report["cs_percent"].as_f64().unwrap() - 100.0).abs() < 1e-9);
}

#[test]
fn dataset_split_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&cli(&["--out", "corpus", "dataset", "gen", "--count", "10"], d));
    let o = cli(&["--json", "dataset", "validate", "corpus/manifest.jsonl"], d);
    assert_ok(&o);
    let o = cli(
        &[
            "--seed",
            "2",
            "--out",
            "split.jsonl",
            "dataset",
            "split",
            "corpus/manifest.jsonl",
        ],
        d,
    );
    assert_ok(&o);
    let text = std::fs::read_to_string(d.join("split.jsonl")).unwrap();
    let splits: Vec<String> = text
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["split"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(splits.len(), 10);
    let count = |s: &str| splits.iter().filter(|x| *x == s).count();
    assert_eq!((count("train"), count("val"), count("test")), (8, 1, 1));

    std::fs::remove_file(d.join("corpus/charts/chart-0003.json")).unwrap();
    let o = cli(&["dataset", "validate", "corpus/manifest.jsonl"], d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(cli(&["no-such-command"], d).status.code(), Some(1));
    assert_eq!(cli(&["--help"], d).status.code(), Some(0));
    assert_eq!(cli(&["parse", "missing.json"], d).status.code(), Some(2));
    std::fs::write(d.join("bad.json"), "{\"not\": \"a chart\"}").unwrap();
    assert_eq!(cli(&["parse", "bad.json"], d).status.code(), Some(2));

    corpus_with_library(d);
    let spec = "corpus/charts/chart-0000.json";
    let o = cli(
        &[
            "summarize",
            "--spec",
            spec,
            "--library",
            "lib.jsonl",
            "--generator",
            "http",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(1));

    let stub = Stub::start(vec![Reply::status(400)]);
    let o = cli(
        &[
            "summarize",
            "--spec",
            spec,
            "--library",
            "lib.jsonl",
            "--generator",
            "http",
            "--endpoint",
            &stub.base_url,
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn summarize_through_stub_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus_with_library(d);
    let stub = Stub::start(vec![Reply::ok("Stub thought.")]);
    let o = cli(
        &[
            "--json",
            "summarize",
            "--spec",
            "corpus/charts/chart-0002.json",
            "--library",
            "lib.jsonl",
            "--generator",
            "http",
            "--endpoint",
            &stub.base_url,
            "--model",
            "m",
        ],
        d,
    );
    assert_ok(&o);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["summary"], "Stub thought.");
    assert_eq!(stub.count(), 5);
}

#[test]
fn parse_reports_fused_chart() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&cli(&["--out", "corpus", "dataset", "gen", "--count", "3"], d));
    let o = cli(&["--json", "parse", "corpus/charts/chart-0000.json"], d);
    assert_ok(&o);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!doc["pairs"].as_array().unwrap().is_empty());
}
