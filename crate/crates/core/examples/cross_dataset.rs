//! Cross-dataset evaluation: trains on each corpus alone and on both jointly,
//! then scores every model on every test split.

use cdcr::harness::{run_cross_dataset, CrossDatasetConfig, ExperimentConfig};
use cdcr::sampler::{NegativePolicy, SamplerConfig};
use cdcr::synth::{generate, split, SynthConfig};

fn config(synth: &SynthConfig) -> ExperimentConfig {
    ExperimentConfig {
        split: split(synth),
        sampler: SamplerConfig {
            policy: NegativePolicy::Monotone,
            ..SamplerConfig::new(8.0, 8, 0)
        },
        classifier_trials: 8,
        clustering_trials: 20,
        folds: 3,
        repetitions: 1,
        ..ExperimentConfig::default()
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synths = [
        SynthConfig::day_per_subtopic(7),
        SynthConfig::cross_subtopic(3),
    ];
    let inputs: Vec<_> = synths.iter().map(generate).collect();
    let cross = CrossDatasetConfig {
        corpora: synths.iter().map(config).collect(),
        train_sets: vec![vec![0], vec![1], vec![0, 1]],
    };
    let report = run_cross_dataset(&cross, &inputs)?;
    print!("{}", report.to_tsv());
    for row in &report.rows {
        println!("{}: {} features", row.train.join("+"), row.features.len());
    }
    Ok(())
}
