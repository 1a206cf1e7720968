//! Clusters test mentions from pairwise probabilities under the three
//! document preclustering modes and scores each response.

use cdcr::classifier::{train, Dataset, LearnerConfig};
use cdcr::clustering::{ClusterConfig, KMeansConfig, Linkage};
use cdcr::corpus::split_corpus;
use cdcr::features::tfidf::TfIdfModel;
use cdcr::features::{FeatureExtractor, FeatureFamily};
use cdcr::harness::{
    build_distance_matrix, cluster_mentions, document_groups, submatrix, PreclusterMode,
};
use cdcr::metrics::cross_document_score;
use cdcr::sampler::{sample_pairs, NegativePolicy, SamplerConfig};
use cdcr::synth::{generate, split, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig::cross_subtopic(3);
    let (corpus, store) = generate(&synth);
    let splits = split_corpus(&corpus, &split(&synth))?;
    let tfidf = TfIdfModel::fit(&splits.train.documents);

    let sampler = SamplerConfig {
        policy: NegativePolicy::Monotone,
        ..SamplerConfig::new(8.0, 8, 0)
    };
    let pairs = sample_pairs(&splits.train, &sampler)?;
    let x = FeatureExtractor::new(&splits.train, &tfidf, &store, &FeatureFamily::ALL);
    let data = Dataset::from_pairs(&x, &pairs.pairs);
    let model = train(&LearnerConfig::default(), &data.matrix, &data.labels, 0)?;

    let test = &splits.test;
    let x = FeatureExtractor::new(test, &tfidf, &store, &FeatureFamily::ALL);
    let full = build_distance_matrix(&model, &x, test, &test.actions())?;
    let config = ClusterConfig::distance(Linkage::Average, 0.5);
    println!("mode\tgroups\tclusters\tLEA_P\tLEA_R\tLEA_F1");
    for mode in [
        PreclusterMode::None,
        PreclusterMode::Gold,
        PreclusterMode::Kmeans,
    ] {
        let groups = document_groups(test, mode, 0, &KMeansConfig::default())?;
        let response = cluster_mentions(test, &groups, |m| Ok(submatrix(&full, test, m)), &config)?;
        let lea = cross_document_score(test, response.clusters())?.lea;
        println!(
            "{mode:?}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}",
            groups.len(),
            response.len(),
            100.0 * lea.precision,
            100.0 * lea.recall,
            100.0 * lea.f1
        );
    }
    Ok(())
}
