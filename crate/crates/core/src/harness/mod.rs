//! Experiment driver: baselines, masking, hyperparameter search, seeded
//! in-dataset and cross-dataset runs.

pub mod baselines;
pub mod experiment;
pub mod mask;
pub mod tune;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, PairModel};
use crate::clustering::{
    agglomerative, gold_preclusters, kmeans_precluster, ClusterConfig, ClusterError, Clustering,
    DistanceMatrix, KMeansConfig,
};
use crate::corpus::{ActionRef, Corpus, CorpusError};
use crate::embeddings::VectorStoreError;
use crate::features::tfidf::TfIdfModel;
use crate::features::{FeatureError, FeatureExtractor};
use crate::metrics::MetricsError;
use crate::sampler::SamplerError;

pub use baselines::{
    lemma_baseline, lemma_delta, lemma_time, lemma_variant, tune_delta, DeltaVariant,
};

pub use experiment::{
    run_cross_dataset, run_in_dataset, CrossDatasetConfig, CrossDatasetReport, ExperimentConfig,
    RunReport,
};
pub use mask::{mask_corpus, mask_store, MaskComponent, MaskSpec};
pub use tune::{apply_trial, random_search, Domain, SearchSpace, TuneResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Vectors(#[from] VectorStoreError),
    #[error("action mention `{0}` has no lemma")]
    MissingLemma(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<HarnessError>,
    },
}

/// Wraps errors of one pipeline stage with its name.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T, HarnessError>;
}

impl<T, E: Into<HarnessError>> StageContext<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, HarnessError> {
        self.map_err(|e| HarnessError::Stage {
            stage,
            source: Box::new(e.into()),
        })
    }
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum PreclusterMode {
    #[default]
    None,
    Gold,
    Kmeans,
}

impl std::str::FromStr for PreclusterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(PreclusterMode::None),
            "gold" => Ok(PreclusterMode::Gold),
            "kmeans" => Ok(PreclusterMode::Kmeans),
            _ => Err(format!("unknown preclustering mode `{s}`")),
        }
    }
}

/// Document groups inside which mentions are clustered, as indices into
/// `corpus.documents`.
pub fn document_groups(
    corpus: &Corpus,
    mode: PreclusterMode,
    seed: u64,
    kmeans: &KMeansConfig,
) -> Result<Vec<Vec<usize>>, HarnessError> {
    let docs: Clustering = match mode {
        PreclusterMode::None => return Ok(vec![(0..corpus.documents.len()).collect()]),
        PreclusterMode::Gold => gold_preclusters(corpus),
        PreclusterMode::Kmeans => {
            if corpus.documents.len() < 3 {
                return Ok(vec![(0..corpus.documents.len()).collect()]);
            }
            let tfidf = TfIdfModel::fit(&corpus.documents);
            kmeans_precluster(&corpus.documents, &tfidf, seed, kmeans)?
        }
    };
    let index = |id: &String| {
        corpus
            .documents
            .iter()
            .position(|d| &d.doc_id == id)
            .expect("known document")
    };
    Ok(docs
        .clusters()
        .iter()
        .map(|c| c.iter().map(index).collect())
        .collect())
}

/// `1 − P(coref)` for every pair of `mentions`, oriented in canonical
/// corpus order.
pub fn build_distance_matrix(
    model: &PairModel,
    extractor: &FeatureExtractor<'_>,
    corpus: &Corpus,
    mentions: &[ActionRef],
) -> Result<DistanceMatrix, HarnessError> {
    let binding = model.bind(extractor.schema())?;
    let ids = mentions.iter().map(|&r| corpus.mention_key(r)).collect();
    Ok(DistanceMatrix::from_fn(ids, |i, j| {
        let (a, b) = if mentions[i] <= mentions[j] {
            (mentions[i], mentions[j])
        } else {
            (mentions[j], mentions[i])
        };
        1.0 - model.predict_bound(&binding, &extractor.extract(a, b))
    }))
}

/// Clusters action mentions independently inside each document group;
/// `distances` supplies the matrix for a group's mentions.
pub fn cluster_mentions(
    corpus: &Corpus,
    groups: &[Vec<usize>],
    distances: impl Fn(&[ActionRef]) -> Result<DistanceMatrix, HarnessError>,
    config: &ClusterConfig,
) -> Result<Clustering, HarnessError> {
    let actions = corpus.actions();
    let mut parts = Vec::with_capacity(groups.len());
    for g in groups {
        let docs: HashSet<usize> = g.iter().copied().collect();
        let mentions: Vec<ActionRef> = actions
            .iter()
            .copied()
            .filter(|r| docs.contains(&r.doc))
            .collect();
        if mentions.is_empty() {
            continue;
        }
        let matrix = distances(&mentions)?;
        let labels = agglomerative(&matrix, config)?;
        parts.push(Clustering::from_labels(matrix.ids(), &labels));
    }
    Ok(Clustering::union(parts)?)
}

/// Restricts a full-corpus matrix (rows in `corpus.actions()` order) to a
/// subset of mentions.
pub fn submatrix(full: &DistanceMatrix, corpus: &Corpus, mentions: &[ActionRef]) -> DistanceMatrix {
    let actions = corpus.actions();
    let pos: Vec<usize> = mentions
        .iter()
        .map(|m| actions.binary_search(m).expect("mention of corpus"))
        .collect();
    let ids = pos.iter().map(|&p| full.ids()[p].clone()).collect();
    DistanceMatrix::from_fn(ids, |i, j| full.get(pos[i], pos[j]))
}
