//! Trains the pair classifier on sampled pairs, runs recursive feature
//! elimination against dev and reports gain importance and per-link-type
//! precision and recall on test pairs.

use cdcr::classifier::{
    evaluate_by_link_type, gain_importance, rfe, train, Dataset, LearnerConfig,
};
use cdcr::corpus::split_corpus;
use cdcr::embeddings::VectorStore;
use cdcr::features::tfidf::TfIdfModel;
use cdcr::features::{FeatureExtractor, FeatureFamily};
use cdcr::sampler::{sample_pairs, NegativePolicy, SamplerConfig};
use cdcr::synth::{generate, split, SynthConfig};

fn dataset(
    corpus: &cdcr::corpus::Corpus,
    store: &VectorStore,
    tfidf: &TfIdfModel,
) -> Result<Dataset, Box<dyn std::error::Error>> {
    let config = SamplerConfig {
        policy: NegativePolicy::Monotone,
        ..SamplerConfig::new(8.0, 8, 0)
    };
    let pairs = sample_pairs(corpus, &config)?;
    let x = FeatureExtractor::new(corpus, tfidf, store, &FeatureFamily::ALL);
    Ok(Dataset::from_pairs(&x, &pairs.pairs))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig::day_per_subtopic(7);
    let (corpus, store) = generate(&synth);
    let splits = split_corpus(&corpus, &split(&synth))?;
    let tfidf = TfIdfModel::fit(&splits.train.documents);
    let (train_set, dev, test) = (
        dataset(&splits.train, &store, &tfidf)?,
        dataset(&splits.dev, &store, &tfidf)?,
        dataset(&splits.test, &store, &tfidf)?,
    );
    let learner = LearnerConfig::default();
    let selection = rfe(&train_set, &dev, &learner, 0)?;
    println!(
        "selected {} features: {:?}",
        selection.selected.len(),
        selection.selected
    );

    let train_set = train_set.select(&selection.selected)?;
    let model = train(&learner, &train_set.matrix, &train_set.labels, 0)?;
    if let Some(importance) = gain_importance(&model) {
        print!("\n{}", importance.to_tsv());
    }
    print!("\n{}", evaluate_by_link_type(&model, &test, 0.5)?.to_tsv());
    Ok(())
}
