//! Coreference evaluation: MUC, B³, CEAFe, LEA and the CoNLL F1 average.
//!
//! Scorers take key and response partitions over a shared mention universe.
//! A mention absent from one side counts as unresolved there. Zero
//! denominators score 0 and set `degenerate`.

pub mod conll;
mod hungarian;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
pub use hungarian::max_weight_assignment;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("response and key cover different mentions: {missing} missing, {extra} extra")]
    Coverage { missing: usize, extra: usize },
    #[error("mention `{0}` appears in more than one cluster")]
    Duplicate(String),
    #[error("malformed CoNLL input at line {line}: {message}")]
    Conll { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (0.0, true)
    } else {
        (num / den, false)
    }
}

impl Score {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            precision,
            recall,
            f1,
            degenerate: false,
        }
    }

    fn from_ratios(p: (f64, f64), r: (f64, f64)) -> Self {
        let (p, dp) = ratio(p.0, p.1);
        let (r, dr) = ratio(r.0, r.1);
        Score {
            degenerate: dp || dr,
            ..Score::from_pr(p, r)
        }
    }
}

/// Cluster index of every mention.
fn membership<T: Hash + Eq>(partition: &[Vec<T>]) -> HashMap<&T, usize> {
    let mut map = HashMap::new();
    for (i, c) in partition.iter().enumerate() {
        for m in c {
            map.insert(m, i);
        }
    }
    map
}

/// Sizes of the intersections of `entity` with the clusters of `other`;
/// mentions missing from `other` are omitted.
fn overlaps<T: Hash + Eq>(entity: &[T], other: &HashMap<&T, usize>) -> HashMap<usize, usize> {
    let mut counts = HashMap::new();
    for m in entity {
        if let Some(&j) = other.get(m) {
            *counts.entry(j).or_insert(0) += 1;
        }
    }
    counts
}

fn muc_side<T: Hash + Eq>(a: &[Vec<T>], b: &[Vec<T>]) -> (f64, f64) {
    let mb = membership(b);
    let (mut num, mut den) = (0usize, 0usize);
    for e in a {
        let parts = overlaps(e, &mb);
        let missing = e.iter().filter(|m| !mb.contains_key(m)).count();
        let p = parts.len() + missing;
        num += e.len() - p.min(e.len());
        den += e.len().saturating_sub(1);
    }
    (num as f64, den as f64)
}

pub fn muc<T: Hash + Eq>(key: &[Vec<T>], response: &[Vec<T>]) -> Score {
    Score::from_ratios(muc_side(response, key), muc_side(key, response))
}

fn b_cubed_side<T: Hash + Eq>(a: &[Vec<T>], b: &[Vec<T>]) -> (f64, f64) {
    let mb = membership(b);
    let (mut num, mut den) = (0.0, 0.0);
    for e in a {
        for &n in overlaps(e, &mb).values() {
            num += (n * n) as f64 / e.len() as f64;
        }
        den += e.len() as f64;
    }
    (num, den)
}

pub fn b_cubed<T: Hash + Eq>(key: &[Vec<T>], response: &[Vec<T>]) -> Score {
    Score::from_ratios(b_cubed_side(response, key), b_cubed_side(key, response))
}

fn phi4<T: Hash + Eq>(k: &[T], r: &[T]) -> f64 {
    let rs: HashSet<&T> = r.iter().collect();
    let common = k.iter().filter(|m| rs.contains(m)).count();
    2.0 * common as f64 / (k.len() + r.len()) as f64
}

/// Entity-level CEAF with the φ₄ similarity and an optimal alignment.
pub fn ceaf_e<T: Hash + Eq>(key: &[Vec<T>], response: &[Vec<T>]) -> Score {
    let key: Vec<&Vec<T>> = key.iter().filter(|c| !c.is_empty()).collect();
    let response: Vec<&Vec<T>> = response.iter().filter(|c| !c.is_empty()).collect();
    let weights: Vec<Vec<f64>> = key
        .iter()
        .map(|k| response.iter().map(|r| phi4(k, r)).collect())
        .collect();
    let (total, _) = max_weight_assignment(&weights, response.len());
    Score::from_ratios((total, response.len() as f64), (total, key.len() as f64))
}

fn links(n: usize) -> f64 {
    if n == 1 {
        1.0
    } else {
        (n * n.saturating_sub(1) / 2) as f64
    }
}

fn lea_side<T: Hash + Eq>(a: &[Vec<T>], b: &[Vec<T>]) -> (f64, f64) {
    let mb = membership(b);
    let (mut num, mut den) = (0.0, 0.0);
    for e in a.iter().filter(|e| !e.is_empty()) {
        let resolved: f64 = if e.len() == 1 {
            if mb.contains_key(&e[0]) {
                1.0
            } else {
                0.0
            }
        } else {
            overlaps(e, &mb)
                .values()
                .map(|&n| (n * n.saturating_sub(1) / 2) as f64)
                .sum()
        };
        num += e.len() as f64 * resolved / links(e.len());
        den += e.len() as f64;
    }
    (num, den)
}

/// Link-based entity-aware metric. A singleton entity has one self-link,
/// resolved whenever its mention is present on the other side.
pub fn lea<T: Hash + Eq>(key: &[Vec<T>], response: &[Vec<T>]) -> Score {
    Score::from_ratios(lea_side(response, key), lea_side(key, response))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub muc: Score,
    pub b_cubed: Score,
    pub ceaf_e: Score,
    pub lea: Score,
    pub conll_f1: f64,
}

pub fn conll_f1(muc: &Score, b_cubed: &Score, ceaf_e: &Score) -> f64 {
    (muc.f1 + b_cubed.f1 + ceaf_e.f1) / 3.0
}

impl MetricReport {
    pub fn new(muc: Score, b_cubed: Score, ceaf_e: Score, lea: Score) -> Self {
        MetricReport {
            conll_f1: conll_f1(&muc, &b_cubed, &ceaf_e),
            muc,
            b_cubed,
            ceaf_e,
            lea,
        }
    }

    pub fn rows(&self) -> [(&'static str, &Score); 4] {
        [
            ("MUC", &self.muc),
            ("B3", &self.b_cubed),
            ("CEAFe", &self.ceaf_e),
            ("LEA", &self.lea),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned table in percent.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tP\tR\tF1\n");
        for (name, s) in self.rows() {
            let _ = writeln!(
                out,
                "{name}\t{:.2}\t{:.2}\t{:.2}",
                100.0 * s.precision,
                100.0 * s.recall,
                100.0 * s.f1
            );
        }
        let _ = writeln!(out, "CoNLL\t\t\t{:.2}", 100.0 * self.conll_f1);
        out
    }
}

fn check_partition<T: Hash + Eq + ToString>(p: &[Vec<T>]) -> Result<HashSet<&T>, MetricsError> {
    let mut seen = HashSet::new();
    for m in p.iter().flatten() {
        if !seen.insert(m) {
            return Err(MetricsError::Duplicate(m.to_string()));
        }
    }
    Ok(seen)
}

/// All four metrics; key and response must be partitions of one universe.
pub fn score<T: Hash + Eq + ToString>(
    key: &[Vec<T>],
    response: &[Vec<T>],
) -> Result<MetricReport, MetricsError> {
    let k = check_partition(key)?;
    let r = check_partition(response)?;
    let missing = k.difference(&r).count();
    let extra = r.difference(&k).count();
    if missing + extra > 0 {
        return Err(MetricsError::Coverage { missing, extra });
    }
    Ok(MetricReport::new(
        muc(key, response),
        b_cubed(key, response),
        ceaf_e(key, response),
        lea(key, response),
    ))
}

/// Gold partition of a corpus's action mentions, keyed `doc/mention`.
pub fn gold_partition(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus
        .gold_clusters()
        .into_iter()
        .map(|c| c.into_iter().map(|r| corpus.mention_key(r)).collect())
        .collect()
}

/// Scores all documents as one meta-document, so cross-document links count.
pub fn cross_document_score(
    corpus: &Corpus,
    response: &[Vec<String>],
) -> Result<MetricReport, MetricsError> {
    score(&gold_partition(corpus), response)
}

fn split_by_document(p: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for c in p {
        let mut by_doc: Vec<(&str, Vec<String>)> = Vec::new();
        for m in c {
            let doc = m.rsplit_once('/').map_or(m.as_str(), |(d, _)| d);
            match by_doc.iter_mut().find(|(d, _)| *d == doc) {
                Some((_, v)) => v.push(m.clone()),
                None => by_doc.push((doc, vec![m.clone()])),
            }
        }
        out.extend(by_doc.into_iter().map(|(_, v)| v));
    }
    out
}

/// Scores only within-document links by cutting every cluster at document
/// boundaries on both sides.
pub fn within_document_score(
    corpus: &Corpus,
    response: &[Vec<String>],
) -> Result<MetricReport, MetricsError> {
    score(
        &split_by_document(&gold_partition(corpus)),
        &split_by_document(response),
    )
}

fn harmonic_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut inv) = (0usize, 0.0);
    for x in xs {
        if x <= 0.0 {
            return 0.0;
        }
        n += 1;
        inv += 1.0 / x;
    }
    if n == 0 {
        0.0
    } else {
        n as f64 / inv
    }
}

/// Cross-corpus aggregate: componentwise harmonic mean of P, R and F1.
pub fn harmonic_aggregate(scores: &[Score]) -> Score {
    Score {
        precision: harmonic_mean(scores.iter().map(|s| s.precision)),
        recall: harmonic_mean(scores.iter().map(|s| s.recall)),
        f1: harmonic_mean(scores.iter().map(|s| s.f1)),
        degenerate: scores.iter().any(|s| s.degenerate),
    }
}
