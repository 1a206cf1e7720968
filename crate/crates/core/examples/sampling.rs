//! Samples labeled mention pairs and prints the per-link-type budget for both
//! negative policies.

use cdcr::corpus::corpus_stats;
use cdcr::sampler::{sample_pairs, NegativePolicy, SamplerConfig};
use cdcr::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (corpus, _) = generate(&SynthConfig::cross_subtopic(3));
    print!("{}", corpus_stats(&corpus).to_tsv());
    for policy in [NegativePolicy::Capped, NegativePolicy::Monotone] {
        let config = SamplerConfig {
            policy,
            ..SamplerConfig::new(8.0, 8, 0)
        };
        let pairs = sample_pairs(&corpus, &config)?;
        println!("\n{policy:?}: {} pairs", pairs.pairs.len());
        println!("link_type\tpositives\tnegatives\ttarget\tpool");
        for (t, c) in &pairs.provenance.per_type {
            println!(
                "{}\t{}\t{}\t{}\t{}",
                t.as_str(),
                c.positives,
                c.negatives,
                c.negative_target,
                c.pool
            );
        }
    }
    Ok(())
}
