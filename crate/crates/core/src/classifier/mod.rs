//! Probabilistic mention-pair classifiers, feature importance, recursive
//! feature elimination and per-link-type evaluation.

pub mod gbt;
pub mod logistic;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LinkType;
use crate::features::io::FeatureTable;
use crate::features::{
    FeatureError, FeatureExtractor, FeatureMatrix, FeatureSchema, FeatureVector,
};
use crate::sampler::MentionPair;
pub use gbt::{GbtParams, TreeEnsemble};
pub use logistic::{LinearModel, LogRegParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data has a single class")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("feature schema mismatch: model needs {0:?}")]
    SchemaMismatch(Vec<String>),
    #[error("{0} labels for {1} rows")]
    LabelCount(usize, usize),
    #[error("pair {0} lacks a label or link type")]
    Unlabeled(usize),
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("model I/O: {0}")]
    Io(String),
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Probability kept strictly inside (0, 1).
fn open_unit(p: f64) -> f64 {
    p.clamp(1e-15, 1.0 - 1e-15)
}

/// Labeled feature rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub matrix: FeatureMatrix,
    pub labels: Vec<bool>,
    pub link_types: Vec<LinkType>,
}

impl Dataset {
    pub fn from_pairs(extractor: &FeatureExtractor<'_>, pairs: &[MentionPair]) -> Self {
        Dataset {
            matrix: extractor.extract_labeled(pairs),
            labels: pairs.iter().map(|p| p.label).collect(),
            link_types: pairs.iter().map(|p| p.link_type).collect(),
        }
    }

    pub fn from_table(table: FeatureTable) -> Result<Self, ClassifierError> {
        let mut labels = Vec::with_capacity(table.labels.len());
        let mut link_types = Vec::with_capacity(table.labels.len());
        for (i, (l, t)) in table.labels.iter().zip(&table.link_types).enumerate() {
            match (l, t) {
                (Some(l), Some(t)) => {
                    labels.push(*l);
                    link_types.push(*t);
                }
                _ => return Err(ClassifierError::Unlabeled(i)),
            }
        }
        Ok(Dataset {
            matrix: table.matrix,
            labels,
            link_types,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, names: &[String]) -> Result<Dataset, ClassifierError> {
        Ok(Dataset {
            matrix: self.matrix.select(names)?,
            labels: self.labels.clone(),
            link_types: self.link_types.clone(),
        })
    }

    pub fn concat(parts: &[&Dataset]) -> Result<Dataset, ClassifierError> {
        let first = parts.first().ok_or(ClassifierError::Empty)?;
        let names = first.matrix.schema.names().to_vec();
        let mut out = Dataset {
            matrix: FeatureMatrix::new(first.matrix.schema.clone(), Vec::new()),
            labels: Vec::new(),
            link_types: Vec::new(),
        };
        for p in parts {
            let p = p.select(&names)?;
            out.matrix.rows.extend(p.matrix.rows);
            out.labels.extend(p.labels);
            out.link_types.extend(p.link_types);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerConfig {
    LinearLogistic(LogRegParams),
    GradientBoostedTrees(GbtParams),
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::GradientBoostedTrees(GbtParams::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Learner {
    LinearLogistic(LinearModel),
    GradientBoostedTrees(TreeEnsemble),
}

/// Trained pair classifier bound to a feature schema by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub format_version: u32,
    pub features: Vec<String>,
    pub seed: u64,
    pub learner: Learner,
}

/// Column positions of a model's features inside some schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding(Vec<usize>);

pub fn train(
    config: &LearnerConfig,
    matrix: &FeatureMatrix,
    labels: &[bool],
    seed: u64,
) -> Result<PairModel, ClassifierError> {
    if labels.len() != matrix.len() {
        return Err(ClassifierError::LabelCount(labels.len(), matrix.len()));
    }
    if labels.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(ClassifierError::SingleClass);
    }
    let learner = match config {
        LearnerConfig::LinearLogistic(p) => {
            Learner::LinearLogistic(LinearModel::fit(matrix, labels, p))
        }
        LearnerConfig::GradientBoostedTrees(p) => {
            Learner::GradientBoostedTrees(TreeEnsemble::fit(matrix, labels, p, seed))
        }
    };
    Ok(PairModel {
        format_version: MODEL_FORMAT_VERSION,
        features: matrix.schema.names().to_vec(),
        seed,
        learner,
    })
}

pub fn train_logreg(
    matrix: &FeatureMatrix,
    labels: &[bool],
    params: &LogRegParams,
    seed: u64,
) -> Result<PairModel, ClassifierError> {
    train(
        &LearnerConfig::LinearLogistic(*params),
        matrix,
        labels,
        seed,
    )
}

pub fn train_gbt(
    matrix: &FeatureMatrix,
    labels: &[bool],
    params: &GbtParams,
    seed: u64,
) -> Result<PairModel, ClassifierError> {
    train(
        &LearnerConfig::GradientBoostedTrees(*params),
        matrix,
        labels,
        seed,
    )
}

impl PairModel {
    pub fn bind(&self, schema: &FeatureSchema) -> Result<Binding, ClassifierError> {
        let mut cols = Vec::with_capacity(self.features.len());
        let mut missing = Vec::new();
        for f in &self.features {
            match schema.position(f) {
                Some(c) => cols.push(c),
                None => missing.push(f.clone()),
            }
        }
        if missing.is_empty() {
            Ok(Binding(cols))
        } else {
            Err(ClassifierError::SchemaMismatch(missing))
        }
    }

    /// Probability for a row given in the model's own feature order.
    pub fn predict_row(&self, value: impl Fn(usize) -> Option<f64>) -> f64 {
        let z = match &self.learner {
            Learner::LinearLogistic(m) => m.margin((0..self.features.len()).map(&value)),
            Learner::GradientBoostedTrees(m) => m.margin(&value),
        };
        open_unit(sigmoid(z))
    }

    pub fn predict_bound(&self, binding: &Binding, v: &FeatureVector) -> f64 {
        self.predict_row(|j| v.values[binding.0[j]])
    }

    pub fn predict_proba(
        &self,
        schema: &FeatureSchema,
        v: &FeatureVector,
    ) -> Result<f64, ClassifierError> {
        Ok(self.predict_bound(&self.bind(schema)?, v))
    }

    pub fn predict_matrix(&self, m: &FeatureMatrix) -> Result<Vec<f64>, ClassifierError> {
        use rayon::prelude::*;
        let b = self.bind(&m.schema)?;
        Ok(m.rows
            .par_iter()
            .map(|r| self.predict_bound(&b, r))
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let m: PairModel =
            serde_json::from_str(text).map_err(|e| ClassifierError::Io(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::Version(m.format_version));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        std::fs::write(path, self.to_json()).map_err(|e| ClassifierError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        Self::from_json(
            &std::fs::read_to_string(path).map_err(|e| ClassifierError::Io(e.to_string()))?,
        )
    }

    /// Native importance: normalized gain for trees, standardized
    /// coefficient magnitude for the linear model.
    pub fn native_importance(&self) -> ImportanceReport {
        let (raw, method) = match &self.learner {
            Learner::LinearLogistic(m) => (m.importances(), ImportanceMethod::Coefficient),
            Learner::GradientBoostedTrees(m) => {
                (m.gains(self.features.len()), ImportanceMethod::Gain)
            }
        };
        ImportanceReport::normalized(&self.features, raw, method)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceMethod {
    Gain,
    Coefficient,
    Permutation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: ImportanceMethod,
    /// Sorted by decreasing importance, then name.
    pub entries: Vec<(String, f64)>,
}

impl ImportanceReport {
    fn sorted(names: &[String], values: Vec<f64>, method: ImportanceMethod) -> Self {
        let mut entries: Vec<(String, f64)> = names.iter().cloned().zip(values).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self { method, entries }
    }

    fn normalized(names: &[String], raw: Vec<f64>, method: ImportanceMethod) -> Self {
        let total: f64 = raw.iter().sum();
        let values = raw
            .into_iter()
            .map(|v| if total > 0.0 { v / total } else { 0.0 })
            .collect();
        Self::sorted(names, values, method)
    }

    /// Per-feature mean over reports of one method; features missing from a
    /// report count as 0.
    pub fn mean(reports: &[ImportanceReport]) -> Option<Self> {
        let first = reports.first()?;
        let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
        for r in reports {
            for (n, v) in &r.entries {
                *sums.entry(n).or_default() += v;
            }
        }
        let names: Vec<String> = sums.keys().map(|n| n.to_string()).collect();
        let values = sums.values().map(|v| v / reports.len() as f64).collect();
        Some(Self::sorted(&names, values, first.method))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|e| e.1)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("feature\timportance\n");
        for (n, v) in &self.entries {
            let _ = writeln!(out, "{n}\t{v:.6}");
        }
        out
    }
}

/// Normalized gain importance of a tree model.
pub fn gain_importance(model: &PairModel) -> Option<ImportanceReport> {
    match &model.learner {
        Learner::GradientBoostedTrees(m) => Some(ImportanceReport::normalized(
            &model.features,
            m.gains(model.features.len()),
            ImportanceMethod::Gain,
        )),
        Learner::LinearLogistic(_) => None,
    }
}

/// Binary F1 of probabilities binarized at `threshold`.
pub fn binary_f1(probs: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let c = Confusion::count(probs.iter().zip(labels).map(|(&p, &l)| (p >= threshold, l)));
    c.f1().unwrap_or(0.0)
}

/// Mean drop of `metric` (higher is better) over `repeats` shuffles of each
/// feature column, floored at 0.
pub fn permutation_importance(
    model: &PairModel,
    data: &Dataset,
    metric: impl Fn(&[f64], &[bool]) -> f64,
    seed: u64,
    repeats: usize,
) -> Result<ImportanceReport, ClassifierError> {
    let binding = model.bind(&data.matrix.schema)?;
    let predict = |rows: &[FeatureVector]| -> Vec<f64> {
        rows.iter()
            .map(|r| model.predict_bound(&binding, r))
            .collect()
    };
    let baseline = metric(&predict(&data.matrix.rows), &data.labels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(model.features.len());
    for j in 0..model.features.len() {
        let col = binding.0[j];
        let mut drop = 0.0;
        for _ in 0..repeats.max(1) {
            let mut column: Vec<Option<f64>> = data.matrix.column(col).collect();
            column.shuffle(&mut rng);
            let rows: Vec<FeatureVector> = data
                .matrix
                .rows
                .iter()
                .zip(column)
                .map(|(r, v)| {
                    let mut r = r.clone();
                    r.values[col] = v;
                    r
                })
                .collect();
            drop += baseline - metric(&predict(&rows), &data.labels);
        }
        values.push((drop / repeats.max(1) as f64).max(0.0));
    }
    Ok(ImportanceReport::sorted(
        &model.features,
        values,
        ImportanceMethod::Permutation,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    pub selected: Vec<String>,
    /// Feature subsets in elimination order with their dev F1.
    pub history: Vec<(Vec<String>, f64)>,
}

/// Recursive feature elimination, one feature per round, scored by dev F1 at
/// 0.5. Returns the best subset; ties go to the smaller one.
pub fn rfe(
    train_set: &Dataset,
    dev: &Dataset,
    config: &LearnerConfig,
    seed: u64,
) -> Result<RfeResult, ClassifierError> {
    let mut current = train_set.matrix.schema.names().to_vec();
    let mut history = Vec::new();
    loop {
        let tr = train_set.select(&current)?;
        let model = train(config, &tr.matrix, &tr.labels, seed)?;
        let probs = model.predict_matrix(&dev.matrix)?;
        history.push((current.clone(), binary_f1(&probs, &dev.labels, 0.5)));
        if current.len() <= 1 {
            break;
        }
        let imp = model.native_importance();
        let weakest = imp.entries.last().expect("nonempty").0.clone();
        current.retain(|f| *f != weakest);
    }
    let best = history
        .iter()
        .fold(None::<&(Vec<String>, f64)>, |acc, h| match acc {
            Some(a) if a.1 > h.1 => Some(a),
            _ => Some(h),
        })
        .expect("nonempty history");
    Ok(RfeResult {
        selected: best.0.clone(),
        history,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn count(items: impl Iterator<Item = (bool, bool)>) -> Self {
        let mut c = Confusion::default();
        for (pred, gold) in items {
            match (pred, gold) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn f1(&self) -> Option<f64> {
        let (p, r) = (self.precision().unwrap_or(0.0), self.recall()?);
        Some(if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub pairs: usize,
    pub confusion: Confusion,
    /// `None` (n/a) when the type has no gold positives.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkTypeReport {
    pub threshold: f64,
    pub per_type: BTreeMap<LinkType, TypeScore>,
}

impl LinkTypeReport {
    pub fn to_tsv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{:.2}", 100.0 * x));
        let mut out = String::from("link_type\tpairs\tP\tR\tF1\n");
        for (t, s) in &self.per_type {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                t.as_str(),
                s.pairs,
                fmt(s.precision),
                fmt(s.recall),
                fmt(s.f1)
            );
        }
        out
    }
}

pub fn evaluate_by_link_type(
    model: &PairModel,
    data: &Dataset,
    threshold: f64,
) -> Result<LinkTypeReport, ClassifierError> {
    let probs = model.predict_matrix(&data.matrix)?;
    Ok(link_type_report(&probs, data, threshold))
}

pub fn link_type_report(probs: &[f64], data: &Dataset, threshold: f64) -> LinkTypeReport {
    link_type_report_from(probs, &data.labels, &data.link_types, threshold)
}

/// Per-type confusion of `probs ≥ threshold` against gold labels.
pub fn link_type_report_from(
    probs: &[f64],
    labels: &[bool],
    link_types: &[LinkType],
    threshold: f64,
) -> LinkTypeReport {
    let mut confusions = BTreeMap::new();
    for t in LinkType::ALL {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| link_types[i] == t).collect();
        if idx.is_empty() {
            continue;
        }
        confusions.insert(
            t,
            Confusion::count(idx.iter().map(|&i| (probs[i] >= threshold, labels[i]))),
        );
    }
    LinkTypeReport::from_confusions(confusions, threshold)
}

impl LinkTypeReport {
    pub fn from_confusions(confusions: BTreeMap<LinkType, Confusion>, threshold: f64) -> Self {
        let mut per_type = BTreeMap::new();
        for (t, c) in confusions {
            let has_pos = c.tp + c.fn_ > 0;
            per_type.insert(
                t,
                TypeScore {
                    pairs: c.tp + c.fp + c.fn_ + c.tn,
                    confusion: c,
                    precision: if has_pos {
                        Some(c.precision().unwrap_or(0.0))
                    } else {
                        None
                    },
                    recall: if has_pos { c.recall() } else { None },
                    f1: if has_pos { c.f1() } else { None },
                },
            );
        }
        LinkTypeReport {
            threshold,
            per_type,
        }
    }

    /// Confusions summed over reports sharing a threshold.
    pub fn pooled(reports: &[LinkTypeReport]) -> Option<Self> {
        let threshold = reports.first()?.threshold;
        let mut sums: BTreeMap<LinkType, Confusion> = BTreeMap::new();
        for r in reports {
            for (t, s) in &r.per_type {
                let c = sums.entry(*t).or_default();
                c.tp += s.confusion.tp;
                c.fp += s.confusion.fp;
                c.fn_ += s.confusion.fn_;
                c.tn += s.confusion.tn;
            }
        }
        Some(Self::from_confusions(sums, threshold))
    }
}
