//! Cross-dataset runs on the two fixtures: one model per training setup,
//! scored unchanged on every test split.

use std::path::PathBuf;

use cdcr::corpus::load_corpus;
use cdcr::embeddings::VectorStore;
use cdcr::harness::{run_cross_dataset, CrossDatasetConfig, ExperimentConfig};
use cdcr::metrics::harmonic_aggregate;
use cdcr::sampler::{NegativePolicy, SamplerConfig};
use cdcr::synth::{split, SynthConfig};

fn load(stem: &str) -> (cdcr::corpus::Corpus, VectorStore) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    (
        load_corpus(dir.join(format!("{stem}.json"))).unwrap(),
        VectorStore::load(dir.join(format!("{stem}.vectors.jsonl"))).unwrap(),
    )
}

fn config(synth: &SynthConfig) -> ExperimentConfig {
    ExperimentConfig {
        split: split(synth),
        sampler: SamplerConfig {
            policy: NegativePolicy::Monotone,
            ..SamplerConfig::new(8.0, 8, 0)
        },
        classifier_trials: 4,
        clustering_trials: 8,
        folds: 2,
        repetitions: 1,
        seeds: vec![0, 1, 2],
        ..ExperimentConfig::default()
    }
}

#[test]
fn joint_training_uses_union_of_selected_features() {
    let inputs = vec![load("synth_day"), load("synth_cross")];
    let cross = CrossDatasetConfig {
        corpora: vec![
            config(&SynthConfig::day_per_subtopic(7)),
            config(&SynthConfig::cross_subtopic(3)),
        ],
        train_sets: vec![vec![0], vec![1], vec![0, 1]],
    };
    let report = run_cross_dataset(&cross, &inputs).unwrap();
    assert_eq!(report.rows.len(), 3);

    let joint = &report.rows[2];
    assert_eq!(joint.train, ["synth-day", "synth-cross"]);
    let mut union: Vec<&String> = report.rows[0]
        .features
        .iter()
        .chain(&report.rows[1].features)
        .collect();
    union.sort();
    union.dedup();
    let mut got: Vec<&String> = joint.features.iter().collect();
    got.sort();
    assert_eq!(got, union);

    for row in &report.rows {
        assert_eq!(row.model_hashes.len(), 3);
        assert_eq!(row.tests.len(), 2);
        for test in row.tests.values() {
            let hashes: Vec<&String> = test.per_seed.iter().map(|s| &s.model_hash).collect();
            assert_eq!(hashes, row.model_hashes.iter().collect::<Vec<_>>());
        }
        let leas: Vec<_> = row.tests.values().map(|r| r.mean.lea).collect();
        assert_eq!(row.lea_aggregate, harmonic_aggregate(&leas));
    }
    let tsv = report.to_tsv();
    assert_eq!(tsv.lines().count(), 4);
    assert!(tsv
        .lines()
        .nth(3)
        .unwrap()
        .starts_with("synth-day+synth-cross\t"));
}

#[test]
fn mismatched_inputs_are_rejected() {
    let inputs = vec![load("synth_day")];
    let cross = CrossDatasetConfig {
        corpora: vec![config(&SynthConfig::day_per_subtopic(7))],
        train_sets: vec![vec![1]],
    };
    assert!(run_cross_dataset(&cross, &inputs).is_err());
    let two = CrossDatasetConfig {
        corpora: vec![config(&SynthConfig::day_per_subtopic(7)); 2],
        train_sets: vec![vec![0]],
    };
    assert!(run_cross_dataset(&two, &inputs).is_err());
}
