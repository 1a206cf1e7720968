//! In-dataset and cross-dataset experiments with seeded final models.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::baselines::lemma_baseline;
use super::mask::{mask_corpus, mask_store, MaskSpec};
use super::tune::{
    apply_trial, classifier_cv, random_search, ClusteringCv, FoldKey, FoldPlan, SearchSpace, Trial,
};
use super::{
    build_distance_matrix, cluster_mentions, document_groups, submatrix, HarnessError,
    PreclusterMode, StageContext,
};
use crate::classifier::{
    gain_importance, link_type_report_from, rfe, train, Dataset, ImportanceReport, LearnerConfig,
    LinkTypeReport, PairModel,
};
use crate::clustering::{ClusterConfig, KMeansConfig, Linkage};
use crate::corpus::{load_corpus, merge_corpora, split_corpus, Corpus, SplitSpec, Splits};
use crate::embeddings::VectorStore;
use crate::features::tfidf::TfIdfModel;
use crate::features::{FeatureExtractor, FeatureFamily};
use crate::metrics::{cross_document_score, harmonic_aggregate, MetricReport, Score};
use crate::sampler::{sample_pairs, MentionPair, SamplerConfig};

/// Probability threshold for per-link-type pair evaluation.
pub const LINK_TYPE_THRESHOLD: f64 = 0.5;

fn default_split() -> SplitSpec {
    SplitSpec::Percent {
        train: 0.6,
        dev: 0.2,
        test: 0.2,
        seed: 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub split: SplitSpec,
    pub sampler: SamplerConfig,
    pub features: Vec<FeatureFamily>,
    /// Recursive feature elimination against the dev split.
    pub feature_selection: bool,
    pub learner: LearnerConfig,
    /// `None` uses the default space of the configured learner.
    pub classifier_space: Option<SearchSpace>,
    /// 0 keeps `learner` as configured.
    pub classifier_trials: usize,
    pub clustering: ClusterConfig,
    pub clustering_space: Option<SearchSpace>,
    /// 0 keeps `clustering` as configured.
    pub clustering_trials: usize,
    pub folds: usize,
    pub repetitions: usize,
    pub fold_key: FoldKey,
    pub precluster: PreclusterMode,
    pub seeds: Vec<u64>,
    pub tuning_seed: u64,
    pub mask: Option<MaskSpec>,
    pub kmeans: KMeansConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            embeddings: None,
            split: default_split(),
            sampler: SamplerConfig::new(8.0, 8, 0),
            features: FeatureFamily::ALL.to_vec(),
            feature_selection: true,
            learner: LearnerConfig::default(),
            classifier_space: None,
            classifier_trials: 200,
            clustering: ClusterConfig::distance(Linkage::Average, 0.5),
            clustering_space: None,
            clustering_trials: 200,
            folds: 6,
            repetitions: 3,
            fold_key: FoldKey::Auto,
            precluster: PreclusterMode::None,
            seeds: (0..5).collect(),
            tuning_seed: 0,
            mask: None,
            kmeans: KMeansConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let c: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable config")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seed list is empty".into()));
        }
        if self.features.is_empty() {
            return Err(HarnessError::Config("no feature families enabled".into()));
        }
        for p in [&self.corpus, &self.embeddings].into_iter().flatten() {
            if !p.exists() {
                return Err(HarnessError::Config(format!(
                    "path {} does not exist",
                    p.display()
                )));
            }
        }
        if let Some(m) = &self.mask {
            m.validate()?;
        }
        self.sampler.validate()?;
        Ok(())
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    /// Loads the configured corpus and embedding sidecar (empty store when
    /// absent).
    pub fn load_inputs(&self) -> Result<(Corpus, VectorStore), HarnessError> {
        let path = self
            .corpus
            .as_ref()
            .ok_or_else(|| HarnessError::Config("no corpus path configured".into()))?;
        let corpus = load_corpus(path).stage("load")?;
        let store = match &self.embeddings {
            Some(p) => VectorStore::load(p).stage("load")?,
            None => VectorStore::new(),
        };
        Ok((corpus, store))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn model_hash(model: &PairModel) -> String {
    sha256_hex(model.to_json().as_bytes())
}

/// Superimposed-mention removal, then masking of corpus and vectors.
pub fn prepare_inputs(
    corpus: &Corpus,
    store: &VectorStore,
    mask: Option<&MaskSpec>,
) -> Result<(Corpus, VectorStore), HarnessError> {
    let corpus = corpus.drop_superimposed();
    match mask {
        Some(spec) => {
            let store = mask_store(store, &corpus, spec);
            Ok((mask_corpus(&corpus, spec)?, store))
        }
        None => Ok((corpus, store.clone())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningSummary {
    pub selected_features: Vec<String>,
    pub learner: LearnerConfig,
    pub classifier_trial: Option<Trial>,
    pub classifier_cv_f1: Option<f64>,
    pub clustering: ClusterConfig,
    pub clustering_trial: Option<Trial>,
    pub clustering_cv_lea_f1: Option<f64>,
}

/// Feature selection and hyperparameter search on the training side.
pub fn tune_pipeline(
    config: &ExperimentConfig,
    train_corpus: &Corpus,
    dev: &Corpus,
    store: &VectorStore,
    selected: Option<Vec<String>>,
) -> Result<TuningSummary, HarnessError> {
    let tfidf = TfIdfModel::fit(&train_corpus.documents);
    let train_x = FeatureExtractor::new(train_corpus, &tfidf, store, &config.features);
    let dev_x = FeatureExtractor::new(dev, &tfidf, store, &config.features);
    let sampler = config.sampler.clone();
    let train_pairs = sample_pairs(train_corpus, &sampler).stage("sample")?.pairs;
    let train_data = Dataset::from_pairs(&train_x, &train_pairs);

    let selected = match selected {
        Some(s) => s,
        None if config.feature_selection => {
            let dev_pairs = sample_pairs(dev, &sampler).stage("sample")?.pairs;
            let dev_data = Dataset::from_pairs(&dev_x, &dev_pairs);
            rfe(&train_data, &dev_data, &config.learner, config.tuning_seed)
                .stage("feature selection")?
                .selected
        }
        None => train_x.schema().names().to_vec(),
    };
    let data = train_data.select(&selected).stage("feature selection")?;
    let needs_cv = config.classifier_trials > 0 || config.clustering_trials > 0;
    let plan = if needs_cv {
        Some(
            FoldPlan::new(
                train_corpus,
                config.folds,
                config.repetitions,
                config.fold_key,
                config.tuning_seed,
            )
            .stage("folds")?,
        )
    } else {
        None
    };

    let (learner, classifier_trial, classifier_cv_f1) = match &plan {
        Some(plan) if config.classifier_trials > 0 => {
            let space = config
                .classifier_space
                .clone()
                .unwrap_or_else(|| SearchSpace::for_learner(&config.learner));
            let result = random_search(&space, config.classifier_trials, config.tuning_seed, |t| {
                classifier_cv(
                    plan,
                    &train_pairs,
                    &data,
                    &apply_trial(&config.learner, t)?,
                    config.tuning_seed,
                )
            })
            .stage("classifier tuning")?;
            (
                apply_trial(&config.learner, &result.best)?,
                Some(result.best),
                result.score,
            )
        }
        _ => (config.learner.clone(), None, None),
    };

    let (clustering, clustering_trial, clustering_cv_lea_f1) = match &plan {
        Some(plan) if config.clustering_trials > 0 => {
            let cv = ClusteringCv::prepare(
                plan,
                train_corpus,
                &train_x,
                &train_pairs,
                &data,
                &learner,
                config.tuning_seed,
            )
            .stage("clustering tuning")?;
            let space = config
                .clustering_space
                .clone()
                .unwrap_or_else(SearchSpace::clustering);
            let result = random_search(&space, config.clustering_trials, config.tuning_seed, |t| {
                cv.score(&apply_trial(&config.clustering, t)?)
            })
            .stage("clustering tuning")?;
            (
                apply_trial(&config.clustering, &result.best)?,
                Some(result.best),
                result.score,
            )
        }
        _ => (config.clustering, None, None),
    };

    Ok(TuningSummary {
        selected_features: selected,
        learner,
        classifier_trial,
        classifier_cv_f1,
        clustering,
        clustering_trial,
        clustering_cv_lea_f1,
    })
}

/// Trains one model on pairs of every part, sampled with
/// `sampler.seed + seed`. Tf-idf statistics come from the first part.
pub fn train_final(
    config: &ExperimentConfig,
    tuning: &TuningSummary,
    parts: &[&Corpus],
    store: &VectorStore,
    seed: u64,
) -> Result<PairModel, HarnessError> {
    let tfidf = TfIdfModel::fit(&parts[0].documents);
    let mut sets = Vec::new();
    for corpus in parts {
        if corpus.documents.is_empty() {
            continue;
        }
        let sampler = SamplerConfig {
            seed: config.sampler.seed.wrapping_add(seed),
            ..config.sampler.clone()
        };
        let pairs: Vec<MentionPair> = sample_pairs(corpus, &sampler).stage("sample")?.pairs;
        let x = FeatureExtractor::new(corpus, &tfidf, store, &config.features);
        sets.push(
            Dataset::from_pairs(&x, &pairs)
                .select(&tuning.selected_features)
                .stage("features")?,
        );
    }
    let refs: Vec<&Dataset> = sets.iter().collect();
    let data = Dataset::concat(&refs).stage("train")?;
    Ok(train(&tuning.learner, &data.matrix, &data.labels, seed).stage("train")?)
}

/// Outcome of one model on one test corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: MetricReport,
    pub link_types: LinkTypeReport,
    #[serde(skip)]
    pub response: Vec<Vec<String>>,
}

/// Predicts all test pairs once, clusters within the preclustering groups
/// and scores cross-document. `tfidf` must be the one used in training.
pub fn evaluate(
    model: &PairModel,
    clustering: &ClusterConfig,
    test: &Corpus,
    store: &VectorStore,
    tfidf: &TfIdfModel,
    families: &[FeatureFamily],
    mode: PreclusterMode,
    kmeans: &KMeansConfig,
    seed: u64,
) -> Result<Evaluation, HarnessError> {
    let x = FeatureExtractor::new(test, tfidf, store, families);
    let actions = test.actions();
    let full = build_distance_matrix(model, &x, test, &actions).stage("predict")?;
    let groups = document_groups(test, mode, seed, kmeans).stage("precluster")?;
    let response = cluster_mentions(test, &groups, |m| Ok(submatrix(&full, test, m)), clustering)
        .stage("cluster")?;
    let metrics = cross_document_score(test, response.clusters()).stage("score")?;
    let n = actions.len();
    let (mut probs, mut labels, mut types) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        for j in i + 1..n {
            probs.push(1.0 - full.get(i, j));
            labels.push(test.gold_cluster(actions[i]) == test.gold_cluster(actions[j]));
            types.push(test.link_type(actions[i], actions[j]));
        }
    }
    Ok(Evaluation {
        metrics,
        link_types: link_type_report_from(&probs, &labels, &types, LINK_TYPE_THRESHOLD),
        response: response.into_clusters(),
    })
}

/// Arithmetic mean of P, R and F1 per metric; CoNLL F1 follows.
pub fn mean_report(reports: &[MetricReport]) -> MetricReport {
    let n = reports.len().max(1) as f64;
    let mean = |f: fn(&MetricReport) -> &Score| Score {
        precision: reports.iter().map(|r| f(r).precision).sum::<f64>() / n,
        recall: reports.iter().map(|r| f(r).recall).sum::<f64>() / n,
        f1: reports.iter().map(|r| f(r).f1).sum::<f64>() / n,
        degenerate: reports.iter().any(|r| f(r).degenerate),
    };
    MetricReport::new(
        mean(|r| &r.muc),
        mean(|r| &r.b_cubed),
        mean(|r| &r.ceaf_e),
        mean(|r| &r.lea),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub model_hash: String,
    pub metrics: MetricReport,
    pub link_types: LinkTypeReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub corpus_id: String,
    pub config_hash: String,
    pub version: String,
    pub precluster: PreclusterMode,
    pub tuning: TuningSummary,
    pub per_seed: Vec<SeedReport>,
    pub mean: MetricReport,
    /// Confusions pooled over seeds.
    pub link_types: LinkTypeReport,
    /// Mean normalized gain over seeds (tree learners only).
    pub importance: Option<ImportanceReport>,
    pub lemma_baseline: MetricReport,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }

    /// Metrics as columns, one row per seed plus the mean.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("run\tMUC_P\tMUC_R\tMUC_F1\tB3_P\tB3_R\tB3_F1\tCEAFe_P\tCEAFe_R\tCEAFe_F1\tLEA_P\tLEA_R\tLEA_F1\tCoNLL_F1\n");
        let row = |name: String, r: &MetricReport| {
            let mut line = name;
            for (_, s) in r.rows() {
                for v in [s.precision, s.recall, s.f1] {
                    line.push_str(&format!("\t{:.2}", 100.0 * v));
                }
            }
            line.push_str(&format!("\t{:.2}\n", 100.0 * r.conll_f1));
            line
        };
        for s in &self.per_seed {
            out.push_str(&row(format!("seed-{}", s.seed), &s.metrics));
        }
        out.push_str(&row("mean".into(), &self.mean));
        out.push_str(&row("lemma-baseline".into(), &self.lemma_baseline));
        out
    }
}

/// State shared by the seeded final models of one training setup.
pub struct TrainedSystem {
    pub tuning: TuningSummary,
    pub tfidf: TfIdfModel,
    pub models: Vec<(u64, PairModel)>,
}

/// Tunes on train (with dev for feature selection) and trains one model per
/// seed on train+dev.
pub fn fit_system(
    config: &ExperimentConfig,
    splits: &Splits,
    store: &VectorStore,
    selected: Option<Vec<String>>,
) -> Result<TrainedSystem, HarnessError> {
    let tuning = tune_pipeline(config, &splits.train, &splits.dev, store, selected)?;
    let models = config
        .seeds
        .par_iter()
        .map(|&s| {
            Ok((
                s,
                train_final(config, &tuning, &[&splits.train, &splits.dev], store, s)?,
            ))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(TrainedSystem {
        tuning,
        tfidf: TfIdfModel::fit(&splits.train.documents),
        models,
    })
}

impl TrainedSystem {
    /// Evaluates every seeded model on `test` and assembles the report.
    pub fn report(
        &self,
        config: &ExperimentConfig,
        test: &Corpus,
        store: &VectorStore,
        mode: PreclusterMode,
    ) -> Result<RunReport, HarnessError> {
        let per_seed = self
            .models
            .par_iter()
            .map(|(seed, model)| {
                let hash = model_hash(model);
                let e = evaluate(
                    model,
                    &self.tuning.clustering,
                    test,
                    store,
                    &self.tfidf,
                    &config.features,
                    mode,
                    &config.kmeans,
                    *seed,
                )?;
                Ok(SeedReport {
                    seed: *seed,
                    model_hash: hash,
                    metrics: e.metrics,
                    link_types: e.link_types,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let metrics: Vec<MetricReport> = per_seed.iter().map(|s| s.metrics.clone()).collect();
        let lt: Vec<LinkTypeReport> = per_seed.iter().map(|s| s.link_types.clone()).collect();
        let gains: Vec<ImportanceReport> = self
            .models
            .iter()
            .filter_map(|(_, m)| gain_importance(m))
            .collect();
        let baseline = lemma_baseline(test).stage("baseline")?;
        Ok(RunReport {
            corpus_id: test.corpus_id.clone(),
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            precluster: mode,
            tuning: self.tuning.clone(),
            mean: mean_report(&metrics),
            link_types: LinkTypeReport::pooled(&lt).expect("nonempty seeds"),
            importance: ImportanceReport::mean(&gains),
            lemma_baseline: cross_document_score(test, baseline.clusters()).stage("baseline")?,
            per_seed,
        })
    }
}

/// Full in-dataset run on an already loaded corpus.
pub fn run_in_dataset(
    config: &ExperimentConfig,
    corpus: &Corpus,
    store: &VectorStore,
) -> Result<RunReport, HarnessError> {
    config.validate()?;
    let (corpus, store) = prepare_inputs(corpus, store, config.mask.as_ref()).stage("prepare")?;
    let splits = split_corpus(&corpus, &config.split).stage("split")?;
    let system = fit_system(config, &splits, &store, None)?;
    system.report(config, &splits.test, &store, config.precluster)
}

/// One corpus of a cross-dataset study with its own in-dataset settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossDatasetConfig {
    /// Per-corpus configs; `corpus` paths are required when run from files.
    pub corpora: Vec<ExperimentConfig>,
    /// Training setups as lists of corpus indices; a list with several
    /// entries trains jointly on the merged corpora.
    pub train_sets: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossDatasetRow {
    pub train: Vec<String>,
    pub features: Vec<String>,
    /// Hash of each seeded model, identical for every test corpus.
    pub model_hashes: Vec<String>,
    pub tests: BTreeMap<String, RunReport>,
    /// Harmonic aggregate of mean LEA over the test corpora.
    pub lea_aggregate: Score,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossDatasetReport {
    pub rows: Vec<CrossDatasetRow>,
}

impl CrossDatasetReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }

    /// Training setups as rows, test corpora as LEA F1 / CoNLL F1 columns.
    pub fn to_tsv(&self) -> String {
        let tests: Vec<&String> = self
            .rows
            .first()
            .map(|r| r.tests.keys().collect())
            .unwrap_or_default();
        let mut out = String::from("train");
        for t in &tests {
            out.push_str(&format!("\t{t}_LEA_F1\t{t}_CoNLL_F1"));
        }
        out.push_str("\tharmonic_LEA_P\tharmonic_LEA_R\tharmonic_LEA_F1\n");
        for r in &self.rows {
            out.push_str(&r.train.join("+"));
            for t in &tests {
                let m = &r.tests[*t].mean;
                out.push_str(&format!(
                    "\t{:.2}\t{:.2}",
                    100.0 * m.lea.f1,
                    100.0 * m.conll_f1
                ));
            }
            let a = &r.lea_aggregate;
            out.push_str(&format!(
                "\t{:.2}\t{:.2}\t{:.2}\n",
                100.0 * a.precision,
                100.0 * a.recall,
                100.0 * a.f1
            ));
        }
        out
    }
}

/// Trains each setup once and evaluates the same models on every test
/// split. Joint setups use the union of the per-corpus selected features.
pub fn run_cross_dataset(
    config: &CrossDatasetConfig,
    inputs: &[(Corpus, VectorStore)],
) -> Result<CrossDatasetReport, HarnessError> {
    if inputs.len() != config.corpora.len() {
        return Err(HarnessError::Config(format!(
            "{} corpus configs for {} inputs",
            config.corpora.len(),
            inputs.len()
        )));
    }
    let dims: Vec<usize> = inputs
        .iter()
        .map(|(_, s)| s.dim())
        .filter(|&d| d > 0)
        .collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(HarnessError::Config(format!(
            "embedding dimensions differ across corpora: {dims:?}"
        )));
    }
    let mut prepared = Vec::new();
    for (c, (corpus, store)) in config.corpora.iter().zip(inputs) {
        c.validate()?;
        let (corpus, store) = prepare_inputs(corpus, store, c.mask.as_ref()).stage("prepare")?;
        let splits = split_corpus(&corpus, &c.split).stage("split")?;
        prepared.push((splits, store));
    }
    let mut singles: BTreeMap<usize, TrainedSystem> = BTreeMap::new();
    let mut rows = Vec::new();
    for set in &config.train_sets {
        if set.is_empty() || set.iter().any(|&i| i >= inputs.len()) {
            return Err(HarnessError::Config(format!(
                "invalid training set {set:?}"
            )));
        }
        let joint;
        let system: &TrainedSystem = if set.len() == 1 {
            let i = set[0];
            if !singles.contains_key(&i) {
                singles.insert(
                    i,
                    fit_system(&config.corpora[i], &prepared[i].0, &prepared[i].1, None)?,
                );
            }
            &singles[&i]
        } else {
            let mut union: Vec<String> = Vec::new();
            for &i in set {
                if !singles.contains_key(&i) {
                    singles.insert(
                        i,
                        fit_system(&config.corpora[i], &prepared[i].0, &prepared[i].1, None)?,
                    );
                }
                for f in &singles[&i].tuning.selected_features {
                    if !union.contains(f) {
                        union.push(f.clone());
                    }
                }
            }
            let merge = |part: fn(&Splits) -> &Corpus| -> Result<Corpus, HarnessError> {
                let cs: Vec<Corpus> = set.iter().map(|&i| part(&prepared[i].0).clone()).collect();
                Ok(merge_corpora(&cs).stage("merge")?)
            };
            let splits = Splits {
                train: merge(|s| &s.train)?,
                dev: merge(|s| &s.dev)?,
                test: merge(|s| &s.test)?,
            };
            let stores: Vec<VectorStore> = set
                .iter()
                .map(|&i| prepared[i].1.namespaced(&prepared[i].0.train.corpus_id))
                .collect();
            let store = VectorStore::merge(&stores).stage("merge")?;
            let mut joint_config = config.corpora[set[0]].clone();
            joint_config.feature_selection = false;
            joint = fit_system(&joint_config, &splits, &store, Some(union))?;
            &joint
        };
        let hashes: Vec<String> = system.models.iter().map(|(_, m)| model_hash(m)).collect();
        let mut tests = BTreeMap::new();
        for (j, (splits, store)) in prepared.iter().enumerate() {
            let report = system.report(
                &config.corpora[j],
                &splits.test,
                store,
                config.corpora[j].precluster,
            )?;
            let seen: Vec<&String> = report.per_seed.iter().map(|s| &s.model_hash).collect();
            assert_eq!(
                seen,
                hashes.iter().collect::<Vec<_>>(),
                "models must not change across test corpora"
            );
            tests.insert(splits.test.corpus_id.clone(), report);
        }
        let lea: Vec<Score> = tests.values().map(|r| r.mean.lea).collect();
        rows.push(CrossDatasetRow {
            train: set
                .iter()
                .map(|&i| prepared[i].0.train.corpus_id.clone())
                .collect(),
            features: system.tuning.selected_features.clone(),
            model_hashes: hashes,
            tests,
            lea_aggregate: harmonic_aggregate(&lea),
        });
    }
    Ok(CrossDatasetReport { rows })
}
