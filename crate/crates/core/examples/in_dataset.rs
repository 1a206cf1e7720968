//! Full in-dataset experiment on a generated corpus: tuning, five seeded
//! models, cross-document scores against the lemma baseline.

use cdcr::harness::experiment::{run_in_dataset, ExperimentConfig};
use cdcr::sampler::{NegativePolicy, SamplerConfig};
use cdcr::synth::{generate, split, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig::day_per_subtopic(7);
    let (corpus, store) = generate(&synth);
    let config = ExperimentConfig {
        split: split(&synth),
        sampler: SamplerConfig {
            policy: NegativePolicy::Monotone,
            ..SamplerConfig::new(8.0, 8, 0)
        },
        classifier_trials: 8,
        clustering_trials: 20,
        folds: 3,
        repetitions: 1,
        ..ExperimentConfig::default()
    };
    let start = std::time::Instant::now();
    let report = run_in_dataset(&config, &corpus, &store)?;
    print!("{}", report.to_tsv());
    println!(
        "selected features: {}",
        report.tuning.selected_features.len()
    );
    println!("clustering: {:?}", report.tuning.clustering);
    println!("{}", report.link_types.to_tsv());
    eprintln!("elapsed: {:.1?}", start.elapsed());
    Ok(())
}
