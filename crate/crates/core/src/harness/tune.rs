//! Seeded random search and grouped repeated k-fold cross-validation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{build_distance_matrix, HarnessError};
use crate::classifier::{binary_f1, train, Dataset, LearnerConfig};
use crate::clustering::{agglomerative, ClusterConfig, Clustering, DistanceMatrix, Linkage};
use crate::corpus::{ActionRef, Corpus};
use crate::features::FeatureExtractor;
use crate::metrics::lea;
use crate::sampler::MentionPair;

/// One hyperparameter assignment, keyed by field name.
pub type Trial = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Domain {
    Choice { values: Vec<Value> },
    Uniform { low: f64, high: f64 },
    LogUniform { low: f64, high: f64 },
    Int { low: i64, high: i64 },
}

impl Domain {
    fn points(&self) -> Option<Vec<Value>> {
        match self {
            Domain::Choice { values } => Some(values.clone()),
            Domain::Int { low, high } => Some((*low..=*high).map(Value::from).collect()),
            Domain::Uniform { .. } | Domain::LogUniform { .. } => None,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Value {
        match self {
            Domain::Choice { values } => values[rng.gen_range(0..values.len())].clone(),
            Domain::Int { low, high } => Value::from(rng.gen_range(*low..=*high)),
            Domain::Uniform { low, high } => Value::from(rng.gen_range(*low..=*high)),
            Domain::LogUniform { low, high } => {
                Value::from(rng.gen_range(low.ln()..=high.ln()).exp())
            }
        }
    }

    fn validate(&self, name: &str) -> Result<(), HarnessError> {
        let ok = match self {
            Domain::Choice { values } => !values.is_empty(),
            Domain::Int { low, high } => low <= high,
            Domain::Uniform { low, high } => low <= high,
            Domain::LogUniform { low, high } => 0.0 < *low && low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("empty domain for `{name}`")))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchSpace {
    pub params: BTreeMap<String, Domain>,
}

impl SearchSpace {
    pub fn new(params: impl IntoIterator<Item = (&'static str, Domain)>) -> Self {
        Self {
            params: params
                .into_iter()
                .map(|(k, d)| (k.to_string(), d))
                .collect(),
        }
    }

    pub fn gbt() -> Self {
        let choice = |v: &[f64]| Domain::Choice {
            values: v.iter().map(|&x| Value::from(x)).collect(),
        };
        Self::new([
            (
                "trees",
                Domain::Choice {
                    values: vec![50.into(), 100.into(), 200.into()],
                },
            ),
            ("max_depth", Domain::Int { low: 2, high: 6 }),
            (
                "learning_rate",
                Domain::LogUniform {
                    low: 0.03,
                    high: 0.5,
                },
            ),
            (
                "min_child_weight",
                Domain::LogUniform {
                    low: 0.1,
                    high: 10.0,
                },
            ),
            (
                "lambda",
                Domain::LogUniform {
                    low: 0.1,
                    high: 10.0,
                },
            ),
            ("gamma", choice(&[0.0, 0.1, 1.0])),
            (
                "subsample",
                Domain::Uniform {
                    low: 0.6,
                    high: 1.0,
                },
            ),
            (
                "colsample",
                Domain::Uniform {
                    low: 0.5,
                    high: 1.0,
                },
            ),
        ])
    }

    pub fn logistic() -> Self {
        Self::new([
            (
                "l2",
                Domain::LogUniform {
                    low: 1e-5,
                    high: 1.0,
                },
            ),
            (
                "learning_rate",
                Domain::Choice {
                    values: vec![0.1.into(), 0.3.into(), 1.0.into()],
                },
            ),
            (
                "epochs",
                Domain::Choice {
                    values: vec![100.into(), 300.into(), 600.into()],
                },
            ),
        ])
    }

    pub fn for_learner(config: &LearnerConfig) -> Self {
        match config {
            LearnerConfig::LinearLogistic(_) => Self::logistic(),
            LearnerConfig::GradientBoostedTrees(_) => Self::gbt(),
        }
    }

    /// Linkage × distance threshold on a 0.05 grid.
    pub fn clustering() -> Self {
        Self::new([
            (
                "linkage",
                Domain::Choice {
                    values: Linkage::ALL
                        .iter()
                        .map(|l| serde_json::to_value(l).expect("serializable"))
                        .collect(),
                },
            ),
            (
                "threshold",
                Domain::Choice {
                    values: (1..=19)
                        .map(|i| Value::from((i as f64 * 0.05 * 100.0).round() / 100.0))
                        .collect(),
                },
            ),
        ])
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params.iter().try_for_each(|(k, d)| d.validate(k))
    }

    /// Cartesian product of all points when every domain is finite.
    pub fn grid(&self) -> Option<Vec<Trial>> {
        let mut out = vec![Trial::new()];
        for (name, domain) in &self.params {
            let points = domain.points()?;
            out = out
                .into_iter()
                .flat_map(|t| {
                    points.iter().map(move |p| {
                        let mut t = t.clone();
                        t.insert(name.clone(), p.clone());
                        t
                    })
                })
                .collect();
        }
        Some(out)
    }

    /// The trials a search with this budget evaluates, in order. Finite
    /// spaces are drawn without replacement (exhaustively when the budget
    /// covers the grid).
    pub fn trials(&self, budget: usize, seed: u64) -> Result<Vec<Trial>, HarnessError> {
        if budget == 0 {
            return Err(HarnessError::Config(
                "search budget must be positive".into(),
            ));
        }
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match self.grid() {
            Some(mut grid) => {
                grid.shuffle(&mut rng);
                grid.truncate(budget);
                grid
            }
            None => (0..budget)
                .map(|_| {
                    self.params
                        .iter()
                        .map(|(k, d)| (k.clone(), d.sample(&mut rng)))
                        .collect()
                })
                .collect(),
        })
    }
}

/// Overlays a trial on the serialized form of `base`.
pub fn apply_trial<T: Serialize + DeserializeOwned>(
    base: &T,
    trial: &Trial,
) -> Result<T, HarnessError> {
    let mut value = serde_json::to_value(base).map_err(|e| HarnessError::Config(e.to_string()))?;
    let object = value
        .as_object_mut()
        .ok_or_else(|| HarnessError::Config("search target is not an object".into()))?;
    for (k, v) in trial {
        if !object.contains_key(k) {
            return Err(HarnessError::Config(format!(
                "unknown hyperparameter `{k}`"
            )));
        }
        object.insert(k.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: Trial,
    /// `None` when the space has a single point and nothing was evaluated.
    pub score: Option<f64>,
    pub history: Vec<(Trial, f64)>,
}

/// Evaluates the budgeted trial sequence in parallel and returns the
/// highest-scoring trial; ties go to the earlier trial.
pub fn random_search<F>(
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    objective: F,
) -> Result<TuneResult, HarnessError>
where
    F: Fn(&Trial) -> Result<f64, HarnessError> + Sync,
{
    let trials = space.trials(budget, seed)?;
    if trials.len() == 1 {
        return Ok(TuneResult {
            best: trials.into_iter().next().expect("one trial"),
            score: None,
            history: Vec::new(),
        });
    }
    let scores: Vec<f64> = trials
        .par_iter()
        .map(&objective)
        .collect::<Result<_, _>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(TuneResult {
        best: trials[best].clone(),
        score: Some(scores[best]),
        history: trials.into_iter().zip(scores).collect(),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldKey {
    /// Topic when there are at least as many topics as folds, else subtopic.
    #[default]
    Auto,
    Topic,
    Subtopic,
}

impl FoldKey {
    pub fn resolve(self, corpus: &Corpus, folds: usize) -> FoldKey {
        match self {
            FoldKey::Auto => {
                let topics: BTreeSet<&str> =
                    corpus.documents.iter().map(|d| d.topic.as_str()).collect();
                if topics.len() >= folds {
                    FoldKey::Topic
                } else {
                    FoldKey::Subtopic
                }
            }
            k => k,
        }
    }
}

/// Fold index per document for each repetition. Documents sharing a group
/// key always share a fold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: usize,
    pub assignments: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn new(
        corpus: &Corpus,
        folds: usize,
        repetitions: usize,
        key: FoldKey,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        if folds < 2 || repetitions == 0 {
            return Err(HarnessError::Config(
                "cross-validation needs ≥ 2 folds and ≥ 1 repetition".into(),
            ));
        }
        let key = key.resolve(corpus, folds);
        let mut groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
        for (i, d) in corpus.documents.iter().enumerate() {
            let sub = if key == FoldKey::Subtopic {
                d.subtopic.as_str()
            } else {
                ""
            };
            groups.entry((d.topic.as_str(), sub)).or_default().push(i);
        }
        if groups.len() < 2 {
            return Err(HarnessError::Config(
                "cross-validation needs at least two document groups".into(),
            ));
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let assignments = (0..repetitions)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
                let mut order: Vec<&Vec<usize>> = groups.iter().collect();
                order.shuffle(&mut rng);
                let mut sizes = vec![0usize; folds];
                let mut fold_of = vec![0usize; corpus.documents.len()];
                for g in order {
                    let f = (0..folds)
                        .min_by_key(|&f| (sizes[f], f))
                        .expect("folds ≥ 2");
                    sizes[f] += g.len();
                    for &d in g {
                        fold_of[d] = f;
                    }
                }
                fold_of
            })
            .collect();
        Ok(Self { folds, assignments })
    }

    /// `(repetition, fold)` pairs that hold out at least one document.
    pub fn splits(&self) -> Vec<(usize, usize)> {
        (0..self.assignments.len())
            .flat_map(|r| {
                (0..self.folds)
                    .filter(move |&f| self.assignments[r].contains(&f))
                    .map(move |f| (r, f))
            })
            .collect()
    }

    /// Row indices of pairs entirely inside and entirely outside the fold.
    pub fn partition_pairs(
        &self,
        pairs: &[MentionPair],
        rep: usize,
        fold: usize,
    ) -> (Vec<usize>, Vec<usize>) {
        let of = &self.assignments[rep];
        let (mut train, mut held) = (Vec::new(), Vec::new());
        for (i, p) in pairs.iter().enumerate() {
            match (of[p.a.doc] == fold, of[p.b.doc] == fold) {
                (false, false) => train.push(i),
                (true, true) => held.push(i),
                _ => {}
            }
        }
        (train, held)
    }
}

fn subset(data: &Dataset, rows: &[usize]) -> Dataset {
    Dataset {
        matrix: data.matrix.take(rows),
        labels: rows.iter().map(|&i| data.labels[i]).collect(),
        link_types: rows.iter().map(|&i| data.link_types[i]).collect(),
    }
}

fn trainable(labels: &[bool]) -> bool {
    labels.iter().any(|&l| l) && labels.iter().any(|&l| !l)
}

/// Mean held-out pair F1 over all usable folds; rows of `data` align with
/// `pairs`.
pub fn classifier_cv(
    plan: &FoldPlan,
    pairs: &[MentionPair],
    data: &Dataset,
    config: &LearnerConfig,
    seed: u64,
) -> Result<f64, HarnessError> {
    let mut scores = Vec::new();
    for (r, f) in plan.splits() {
        let (tr, held) = plan.partition_pairs(pairs, r, f);
        let (tr, held) = (subset(data, &tr), subset(data, &held));
        if !trainable(&tr.labels) || !held.labels.iter().any(|&l| l) {
            continue;
        }
        let model = train(config, &tr.matrix, &tr.labels, seed)?;
        scores.push(binary_f1(
            &model.predict_matrix(&held.matrix)?,
            &held.labels,
            0.5,
        ));
    }
    if scores.is_empty() {
        return Err(HarnessError::Config(
            "no fold has trainable and scorable pairs".into(),
        ));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Held-out distance matrices and gold partitions, one per fold, so that
/// clustering trials only re-cut precomputed matrices.
pub struct ClusteringCv {
    folds: Vec<(DistanceMatrix, Vec<Vec<String>>)>,
}

impl ClusteringCv {
    pub fn prepare(
        plan: &FoldPlan,
        corpus: &Corpus,
        extractor: &FeatureExtractor<'_>,
        pairs: &[MentionPair],
        data: &Dataset,
        config: &LearnerConfig,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        let actions = corpus.actions();
        let gold: Vec<Vec<ActionRef>> = corpus.gold_clusters();
        let folds = plan
            .splits()
            .into_par_iter()
            .map(|(r, f)| -> Result<Option<_>, HarnessError> {
                let of = &plan.assignments[r];
                let (tr, _) = plan.partition_pairs(pairs, r, f);
                let tr = subset(data, &tr);
                if !trainable(&tr.labels) {
                    return Ok(None);
                }
                let model = train(config, &tr.matrix, &tr.labels, seed)?;
                let mentions: Vec<ActionRef> =
                    actions.iter().copied().filter(|m| of[m.doc] == f).collect();
                if mentions.is_empty() {
                    return Ok(None);
                }
                let matrix = build_distance_matrix(&model, extractor, corpus, &mentions)?;
                let key: Vec<Vec<String>> = gold
                    .iter()
                    .map(|c| {
                        c.iter()
                            .filter(|m| of[m.doc] == f)
                            .map(|&m| corpus.mention_key(m))
                            .collect::<Vec<_>>()
                    })
                    .filter(|c| !c.is_empty())
                    .collect();
                Ok(Some((matrix, key)))
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect::<Vec<_>>();
        if folds.is_empty() {
            return Err(HarnessError::Config(
                "no fold supports clustering evaluation".into(),
            ));
        }
        Ok(Self { folds })
    }

    /// Mean held-out LEA F1 under `config`.
    pub fn score(&self, config: &ClusterConfig) -> Result<f64, HarnessError> {
        let mut total = 0.0;
        for (matrix, key) in &self.folds {
            let labels = agglomerative(matrix, config)?;
            let response = Clustering::from_labels(matrix.ids(), &labels);
            total += lea(key, response.clusters()).f1;
        }
        Ok(total / self.folds.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::GbtParams;

    #[test]
    fn one_point_space_returns_immediately() {
        let space = SearchSpace::new([(
            "x",
            Domain::Choice {
                values: vec![3.into()],
            },
        )]);
        let r = random_search(&space, 10, 0, |_| panic!("must not evaluate")).unwrap();
        assert_eq!(r.best["x"], Value::from(3));
        assert!(r.score.is_none());
    }

    #[test]
    fn planted_optimum_is_found() {
        let space = SearchSpace::new([(
            "x",
            Domain::Choice {
                values: vec![1.into(), 2.into()],
            },
        )]);
        for seed in 0..10 {
            let r = random_search(&space, 2, seed, |t| {
                Ok(if t["x"] == Value::from(2) { 0.9 } else { 0.1 })
            })
            .unwrap();
            assert_eq!(r.best["x"], Value::from(2));
        }
    }

    #[test]
    fn zero_budget_is_an_error() {
        assert!(SearchSpace::gbt().trials(0, 0).is_err());
    }

    #[test]
    fn trial_sequence_is_seeded() {
        let s = SearchSpace::gbt();
        assert_eq!(s.trials(20, 4).unwrap(), s.trials(20, 4).unwrap());
        assert_ne!(s.trials(20, 4).unwrap(), s.trials(20, 5).unwrap());
        for t in s.trials(50, 1).unwrap() {
            let p: GbtParams = apply_trial(&GbtParams::default(), &t).unwrap();
            assert!((0.03..=0.5).contains(&p.learning_rate) && (2..=6).contains(&p.max_depth));
        }
    }

    #[test]
    fn finite_grid_is_exhausted_without_repeats() {
        let s = SearchSpace::clustering();
        let trials = s.trials(500, 0).unwrap();
        assert_eq!(trials.len(), 57);
        let distinct: BTreeSet<String> = trials
            .iter()
            .map(|t| serde_json::to_string(t).unwrap())
            .collect();
        assert_eq!(distinct.len(), 57);
        let c: ClusterConfig =
            apply_trial(&ClusterConfig::distance(Linkage::Average, 0.5), &trials[0]).unwrap();
        assert!((0.05..=0.95).contains(&c.threshold));
    }

    #[test]
    fn learner_config_accepts_overlay() {
        let mut t = Trial::new();
        t.insert("max_depth".into(), 3.into());
        let c: LearnerConfig = apply_trial(&LearnerConfig::default(), &t).unwrap();
        assert!(matches!(c, LearnerConfig::GradientBoostedTrees(p) if p.max_depth == 3));
        t.insert("bogus".into(), 1.into());
        assert!(apply_trial(&LearnerConfig::default(), &t).is_err());
    }
}
