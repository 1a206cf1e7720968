//! Ablation by masking: replaces the mentions of one event component at a
//! time with random dummy tokens and reruns the experiment.

use cdcr::harness::experiment::{run_in_dataset, ExperimentConfig};
use cdcr::harness::{mask_corpus, MaskComponent, MaskSpec};
use cdcr::sampler::{NegativePolicy, SamplerConfig};
use cdcr::synth::{generate, split, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig::day_per_subtopic(7);
    let (corpus, store) = generate(&synth);

    let spec = MaskSpec::new([MaskComponent::Action], 1);
    let masked = mask_corpus(&corpus, &spec)?;
    let doc = &masked.documents[0];
    println!("masked sentence: {}\n", doc.sentences[0].join(" "));

    let base = ExperimentConfig {
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
    println!("masked\tLEA_F1");
    let plain = run_in_dataset(&base, &corpus, &store)?;
    println!("nothing\t{:.2}", 100.0 * plain.mean.lea.f1);
    for component in [
        MaskComponent::Action,
        MaskComponent::Time,
        MaskComponent::Location,
    ] {
        let config = ExperimentConfig {
            mask: Some(MaskSpec::new([component], 1)),
            ..base.clone()
        };
        let report = run_in_dataset(&config, &corpus, &store)?;
        println!("{component:?}\t{:.2}", 100.0 * report.mean.lea.f1);
    }
    Ok(())
}
