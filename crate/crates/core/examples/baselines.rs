//! Lemma baselines: plain lemma matching, lemma matching inside tf-idf
//! document clusters and inside publication-time clusters, with δ tuned on
//! the training split.

use cdcr::corpus::split_corpus;
use cdcr::harness::{lemma_baseline, lemma_variant, tune_delta, DeltaVariant};
use cdcr::metrics::cross_document_score;
use cdcr::synth::{generate, split, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig::day_per_subtopic(7);
    let (corpus, _) = generate(&synth);
    let splits = split_corpus(&corpus, &split(&synth))?;
    let test = &splits.test;

    let lemma = cross_document_score(test, lemma_baseline(test)?.clusters())?;
    println!("baseline\tdelta\tCoNLL_F1\tLEA_F1");
    println!(
        "lemma\t-\t{:.2}\t{:.2}",
        100.0 * lemma.conll_f1,
        100.0 * lemma.lea.f1
    );
    for (name, variant) in [
        ("lemma-delta", DeltaVariant::Tfidf),
        ("lemma-time", DeltaVariant::Time),
    ] {
        let delta = tune_delta(&splits.train, variant)?;
        let response = lemma_variant(test, variant, delta)?;
        let r = cross_document_score(test, response.clusters())?;
        println!(
            "{name}\t{delta}\t{:.2}\t{:.2}",
            100.0 * r.conll_f1,
            100.0 * r.lea.f1
        );
    }
    Ok(())
}
