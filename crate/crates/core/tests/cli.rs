//! Drives the `cdcr` binary through a full file-based pipeline on the
//! checked-in fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cdcr::clustering::Clustering;
use cdcr::corpus::load_corpus;
use cdcr::metrics::MetricReport;
use cdcr::synth::{split, SynthConfig};
use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn cdcr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdcr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cdcr(args);
    assert!(
        out.status.success(),
        "cdcr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn stats_prints_link_counts() {
    let out = ok(&["stats", "--corpus", s(&fixture("synth_day.json"))]);
    assert!(out.contains("within-document"), "{out}");
    assert!(out.contains("cross-topic"), "{out}");
}

#[test]
fn file_pipeline_from_split_to_score() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = fixture("synth_day.json");
    let vectors = fixture("synth_day.vectors.jsonl");
    let spec = d.join("spec.json");
    std::fs::write(
        &spec,
        serde_json::to_string(&split(&SynthConfig::day_per_subtopic(7))).unwrap(),
    )
    .unwrap();
    let split_out = ok(&[
        "split",
        "--corpus",
        s(&corpus),
        "--spec",
        s(&spec),
        "--out-dir",
        s(d),
    ]);
    assert!(split_out.starts_with("train\t"), "{split_out}");

    for part in ["train", "dev"] {
        let pairs = d.join(format!("{part}.pairs.jsonl"));
        let sampled = ok(&[
            "sample",
            "--corpus",
            s(&d.join(format!("{part}.json"))),
            "--k",
            "4",
            "--policy",
            "monotone",
            "--seed",
            "3",
            "--out",
            s(&pairs),
        ]);
        assert!(sampled.contains("positives"), "{sampled}");
        ok(&[
            "featurize",
            "--corpus",
            s(&d.join(format!("{part}.json"))),
            "--embeddings",
            s(&vectors),
            "--pairs",
            s(&pairs),
            "--tfidf-corpus",
            s(&d.join("train.json")),
            "--out",
            s(&d.join(format!("{part}.features.jsonl"))),
        ]);
    }
    let selected = d.join("selected.json");
    ok(&[
        "select-features",
        "--train",
        s(&d.join("train.features.jsonl")),
        "--dev",
        s(&d.join("dev.features.jsonl")),
        "--out",
        s(&selected),
    ]);
    let names: Vec<String> = read_json(&selected);
    assert!(!names.is_empty());

    let model = d.join("model.json");
    ok(&[
        "train",
        "--features",
        s(&d.join("train.features.jsonl")),
        "--select",
        s(&selected),
        "--out",
        s(&model),
    ]);
    let test = d.join("test.json");
    let predictions = d.join("predictions.jsonl");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--corpus",
        s(&test),
        "--embeddings",
        s(&vectors),
        "--tfidf-corpus",
        s(&d.join("train.json")),
        "--out",
        s(&predictions),
    ]);
    let n = load_corpus(&test).unwrap().actions().len();
    let lines = std::fs::read_to_string(&predictions).unwrap();
    assert_eq!(lines.lines().count(), n * (n - 1) / 2);
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert!((0.0..=1.0).contains(&first["p"].as_f64().unwrap()));

    let response = d.join("response.json");
    let scores_dir = d.join("scores");
    let printed = ok(&[
        "cluster",
        "--corpus",
        s(&test),
        "--predictions",
        s(&predictions),
        "--linkage",
        "average",
        "--threshold",
        "0.5",
        "--out",
        s(&response),
        "--out-dir",
        s(&scores_dir),
    ]);
    assert!(printed.contains("LEA"), "{printed}");
    let clustering = Clustering::from_json(&std::fs::read_to_string(&response).unwrap()).unwrap();
    assert_eq!(clustering.items(), n);
    let report: MetricReport = read_json(&scores_dir.join("scores.json"));
    assert!(report.lea.f1 > 0.5, "{report:?}");

    // Scoring the written response reproduces the cluster report.
    let rescored = d.join("rescored");
    ok(&[
        "score",
        "--corpus",
        s(&test),
        "--response",
        s(&response),
        "--out-dir",
        s(&rescored),
    ]);
    let again: MetricReport = read_json(&rescored.join("scores.json"));
    assert_eq!(again, report);

    // Gold preclustering runs through the same command.
    ok(&[
        "cluster",
        "--corpus",
        s(&test),
        "--predictions",
        s(&predictions),
        "--precluster",
        "gold",
        "--out",
        s(&d.join("gold.json")),
    ]);
}

#[test]
fn score_accepts_conll_and_within_document() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = fixture("synth_cross.json");
    let corpus = load_corpus(&corpus_path).unwrap();
    let gold = Clustering::new(cdcr::metrics::gold_partition(&corpus)).unwrap();
    let conll = dir.path().join("gold.conll");
    std::fs::write(&conll, gold.to_conll("all")).unwrap();
    let out_dir = dir.path().join("out");
    ok(&[
        "score",
        "--corpus",
        s(&corpus_path),
        "--response",
        s(&conll),
        "--out-dir",
        s(&out_dir),
    ]);
    let report: MetricReport = read_json(&out_dir.join("scores.json"));
    assert_eq!(report.lea.f1, 1.0);
    assert_eq!(report.conll_f1, 1.0);
    let within = ok(&[
        "score",
        "--corpus",
        s(&corpus_path),
        "--response",
        s(&conll),
        "--within-document",
    ]);
    assert!(within.contains("CoNLL\t\t\t100.00"), "{within}");
}

#[test]
fn baselines_report_scores() {
    let corpus = fixture("synth_day.json");
    let lemma = ok(&["baseline", "lemma", "--corpus", s(&corpus)]);
    assert!(lemma.contains("LEA"), "{lemma}");
    let tuned = ok(&[
        "baseline",
        "lemma-delta",
        "--corpus",
        s(&corpus),
        "--tune-on",
        s(&corpus),
    ]);
    assert!(tuned.starts_with("delta\t"), "{tuned}");
    let timed = ok(&[
        "baseline",
        "lemma-time",
        "--corpus",
        s(&corpus),
        "--delta",
        "24",
    ]);
    assert!(timed.starts_with("delta\t24"), "{timed}");
    let missing = cdcr(&["baseline", "lemma-time", "--corpus", s(&corpus)]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--delta"));
}

#[test]
fn mask_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = fixture("synth_day.json");
    let vectors = fixture("synth_day.vectors.jsonl");
    let run = |seed: &str, name: &str| {
        ok(&[
            "mask",
            "--corpus",
            s(&corpus),
            "--embeddings",
            s(&vectors),
            "--components",
            "action,time",
            "--seed",
            seed,
            "--out",
            s(&d.join(format!("{name}.json"))),
            "--out-embeddings",
            s(&d.join(format!("{name}.jsonl"))),
        ]);
        std::fs::read_to_string(d.join(format!("{name}.json"))).unwrap()
    };
    let a = run("4", "a");
    assert_eq!(a, run("4", "b"));
    assert_ne!(a, run("5", "c"));
    let masked = load_corpus(d.join("a.json")).unwrap();
    assert!(masked.documents.iter().all(|doc| doc.timex.is_empty()));
    let kept = std::fs::read_to_string(d.join("a.jsonl"))
        .unwrap()
        .lines()
        .count();
    let all = std::fs::read_to_string(&vectors).unwrap().lines().count();
    assert!(kept < all);
}

fn experiment_json(stem: &str, synth: &SynthConfig) -> Value {
    json!({
        "corpus": fixture(&format!("{stem}.json")),
        "embeddings": fixture(&format!("{stem}.vectors.jsonl")),
        "split": split(synth),
        "sampler": {"c": 8.0, "k": 8, "seed": 0, "policy": "monotone"},
        "classifier_trials": 0,
        "clustering_trials": 4,
        "folds": 2,
        "repetitions": 1,
        "seeds": [0, 1]
    })
}

#[test]
fn in_dataset_experiment_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = d.join("config.json");
    std::fs::write(
        &config,
        experiment_json("synth_day", &SynthConfig::day_per_subtopic(7)).to_string(),
    )
    .unwrap();
    let out = ok(&[
        "experiment",
        "in-dataset",
        "--config",
        s(&config),
        "--seed",
        "9",
        "--out-dir",
        s(d),
    ]);
    assert!(out.contains("seed-9"), "{out}");
    assert!(out.contains("lemma-baseline"), "{out}");
    let report: Value = read_json(&d.join("report.json"));
    assert_eq!(report["per_seed"].as_array().unwrap().len(), 1);
    assert!(d.join("report.tsv").exists());
    assert!(d.join("link_types.tsv").exists());

    let tuning = ok(&["tune", "--config", s(&config)]);
    let summary: Value = serde_json::from_str(&tuning).unwrap();
    assert!(summary["selected_features"].as_array().is_some());
}

#[test]
fn cross_dataset_experiment_runs_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = d.join("cross.json");
    let body = json!({
        "corpora": [
            experiment_json("synth_day", &SynthConfig::day_per_subtopic(7)),
            experiment_json("synth_cross", &SynthConfig::cross_subtopic(3)),
        ],
        "train_sets": [[0], [0, 1]]
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let out = ok(&[
        "experiment",
        "cross-dataset",
        "--config",
        s(&config),
        "--out-dir",
        s(d),
    ]);
    assert!(out.contains("synth-day+synth-cross"), "{out}");
    let report: Value = read_json(&d.join("cross_dataset.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let out = cdcr(&["stats", "--corpus", "/nonexistent/corpus.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"no_such_field": 1}"#).unwrap();
    let out = cdcr(&["experiment", "in-dataset", "--config", s(&config)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_field"));
}
