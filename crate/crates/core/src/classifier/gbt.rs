//! Gradient-boosted regression trees on the logistic loss.
//!
//! Second-order (Newton) boosting with exact greedy split search over
//! presorted columns, L2 leaf regularization `lambda`, split penalty `gamma`
//! and a learned default direction for absent values. Rows go left when
//! `value < threshold`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Fraction of rows drawn (without replacement) per tree.
    pub subsample: f64,
    /// Fraction of features drawn per tree.
    pub colsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: 4,
            learning_rate: 0.3,
            min_child_weight: 1.0,
            lambda: 1.0,
            gamma: 0.0,
            subsample: 1.0,
            colsample: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        gain: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &dyn Fn(usize) -> Option<f64>) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let go_left = match row(*feature) {
                        Some(v) => v < *threshold,
                        None => *default_left,
                    };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub default_left: bool,
    pub gain: f64,
}

/// Splits must beat rounding noise.
const MIN_SPLIT_GAIN: f64 = 1e-9;

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Gain of splitting a node with totals `(g, h)` into `(gl, hl)` and the rest.
pub fn split_gain(gl: f64, hl: f64, g: f64, h: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (score(gl, hl, lambda) + score(g - gl, h - hl, lambda) - score(g, h, lambda)) - gamma
}

struct Columns {
    /// Per feature, present rows sorted by value.
    sorted: Vec<Vec<(f64, u32)>>,
}

impl Columns {
    fn new(matrix: &FeatureMatrix) -> Self {
        let sorted = (0..matrix.schema.len())
            .into_par_iter()
            .map(|j| {
                let mut col: Vec<(f64, u32)> = matrix
                    .rows
                    .iter()
                    .enumerate()
                    .filter_map(|(i, r)| r.values[j].map(|v| (v, i as u32)))
                    .collect();
                col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                col
            })
            .collect();
        Self { sorted }
    }
}

#[derive(Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    n: usize,
}

/// Best split per active node for one feature.
fn best_splits_for_feature(
    col: &[(f64, u32)],
    feature: usize,
    slot_of: &[Option<usize>],
    totals: &[Stats],
    grad: &[f64],
    hess: &[f64],
    params: &GbtParams,
) -> Vec<Option<SplitCandidate>> {
    let k = totals.len();
    let mut present = vec![Stats::default(); k];
    for &(_, r) in col {
        if let Some(s) = slot_of[r as usize] {
            present[s].g += grad[r as usize];
            present[s].h += hess[r as usize];
            present[s].n += 1;
        }
    }
    let mut left = vec![Stats::default(); k];
    let mut last: Vec<Option<f64>> = vec![None; k];
    let mut best: Vec<Option<SplitCandidate>> = vec![None; k];
    for &(v, r) in col {
        let Some(s) = slot_of[r as usize] else {
            continue;
        };
        if let Some(lv) = last[s] {
            if v > lv {
                let has_missing = present[s].n < totals[s].n;
                let missing = if has_missing {
                    Stats {
                        g: totals[s].g - present[s].g,
                        h: totals[s].h - present[s].h,
                        n: totals[s].n - present[s].n,
                    }
                } else {
                    Stats::default()
                };
                let threshold = lv + (v - lv) / 2.0;
                let directions: &[bool] = if has_missing {
                    &[false, true]
                } else {
                    &[false]
                };
                for &default_left in directions {
                    let (gl, hl) = if default_left {
                        (left[s].g + missing.g, left[s].h + missing.h)
                    } else {
                        (left[s].g, left[s].h)
                    };
                    let hr = totals[s].h - hl;
                    if hl < params.min_child_weight || hr < params.min_child_weight {
                        continue;
                    }
                    let gain = split_gain(
                        gl,
                        hl,
                        totals[s].g,
                        totals[s].h,
                        params.lambda,
                        params.gamma,
                    );
                    if gain > MIN_SPLIT_GAIN && best[s].map_or(true, |b| gain > b.gain) {
                        best[s] = Some(SplitCandidate {
                            feature,
                            threshold,
                            default_left,
                            gain,
                        });
                    }
                }
            }
        }
        left[s].g += grad[r as usize];
        left[s].h += hess[r as usize];
        last[s] = Some(v);
    }
    best
}

fn grow_tree(
    matrix: &FeatureMatrix,
    columns: &Columns,
    rows: &[usize],
    features: &[usize],
    grad: &[f64],
    hess: &[f64],
    params: &GbtParams,
) -> Tree {
    let n = matrix.rows.len();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    // Active nodes of the current level, and each row's slot among them.
    let mut active: Vec<usize> = vec![0];
    let mut slot_of: Vec<Option<usize>> = vec![None; n];
    for &r in rows {
        slot_of[r] = Some(0);
    }
    for depth in 0..=params.max_depth {
        if active.is_empty() {
            break;
        }
        let mut totals = vec![Stats::default(); active.len()];
        for (r, s) in slot_of.iter().enumerate() {
            if let Some(s) = s {
                totals[*s].g += grad[r];
                totals[*s].h += hess[r];
                totals[*s].n += 1;
            }
        }
        let best: Vec<Option<SplitCandidate>> = if depth == params.max_depth {
            vec![None; active.len()]
        } else {
            let per_feature: Vec<Vec<Option<SplitCandidate>>> = features
                .par_iter()
                .map(|&j| {
                    best_splits_for_feature(
                        &columns.sorted[j],
                        j,
                        &slot_of,
                        &totals,
                        grad,
                        hess,
                        params,
                    )
                })
                .collect();
            (0..active.len())
                .map(|s| {
                    per_feature.iter().filter_map(|f| f[s]).fold(
                        None,
                        |acc: Option<SplitCandidate>, c| match acc {
                            Some(a) if a.gain >= c.gain => Some(a),
                            _ => Some(c),
                        },
                    )
                })
                .collect()
        };
        let mut next_active = Vec::new();
        let mut child_slots: Vec<Option<(usize, usize)>> = vec![None; active.len()];
        for (s, &node) in active.iter().enumerate() {
            match best[s] {
                Some(c) => {
                    let (l, r) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[node] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        default_left: c.default_left,
                        gain: c.gain,
                        left: l,
                        right: r,
                    };
                    child_slots[s] = Some((next_active.len(), next_active.len() + 1));
                    next_active.push(l);
                    next_active.push(r);
                }
                None => {
                    let t = totals[s];
                    nodes[node] = Node::Leaf {
                        value: -params.learning_rate * t.g / (t.h + params.lambda),
                    };
                }
            }
        }
        for r in 0..n {
            let Some(s) = slot_of[r] else { continue };
            slot_of[r] = match (best[s], child_slots[s]) {
                (Some(c), Some((l, rt))) => {
                    let go_left = match matrix.rows[r].values[c.feature] {
                        Some(v) => v < c.threshold,
                        None => c.default_left,
                    };
                    Some(if go_left { l } else { rt })
                }
                _ => None,
            };
        }
        active = next_active;
    }
    Tree { nodes }
}

impl TreeEnsemble {
    pub fn fit(matrix: &FeatureMatrix, labels: &[bool], params: &GbtParams, seed: u64) -> Self {
        let n = matrix.rows.len();
        let d = matrix.schema.len();
        let positives = labels.iter().filter(|&&l| l).count() as f64;
        let rate = (positives / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (rate / (1.0 - rate)).ln();
        let columns = Columns::new(matrix);
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let mut margin = vec![base_score; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(params.trees);
        for _ in 0..params.trees {
            let p: Vec<f64> = margin.iter().map(|&m| sigmoid(m)).collect();
            let grad: Vec<f64> = p.iter().zip(&y).map(|(p, y)| p - y).collect();
            let hess: Vec<f64> = p.iter().map(|p| (p * (1.0 - p)).max(1e-16)).collect();
            let rows: Vec<usize> = if params.subsample < 1.0 {
                let m = ((n as f64 * params.subsample).ceil() as usize).clamp(1, n);
                let mut r = sample(&mut rng, n, m).into_vec();
                r.sort_unstable();
                r
            } else {
                (0..n).collect()
            };
            let features: Vec<usize> = if params.colsample < 1.0 && d > 0 {
                let m = ((d as f64 * params.colsample).ceil() as usize).clamp(1, d);
                let mut f = sample(&mut rng, d, m).into_vec();
                f.sort_unstable();
                f
            } else {
                (0..d).collect()
            };
            let tree = grow_tree(matrix, &columns, &rows, &features, &grad, &hess, params);
            for (i, m) in margin.iter_mut().enumerate() {
                *m += tree.predict(&|j| matrix.rows[i].values[j]);
            }
            trees.push(tree);
        }
        Self { base_score, trees }
    }

    pub fn margin(&self, row: &dyn Fn(usize) -> Option<f64>) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    /// Total split gain per feature (unnormalized).
    pub fn gains(&self, features: usize) -> Vec<f64> {
        let mut g = vec![0.0; features];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split { feature, gain, .. } = n {
                    g[*feature] += gain;
                }
            }
        }
        g
    }
}
