//! Training pair generation.
//!
//! Coreferring pairs are undersampled per cluster: small clusters (relative
//! to the distribution of cluster sizes) contribute all of their pairs, the
//! largest cluster contributes `⌈(m-1)·c⌉`. Non-coreferring pairs are drawn
//! per link type, at most `k` per coreferring pair of that type.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ActionRef, Corpus, CorpusError, LinkType};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("cluster size distribution is empty")]
    EmptyDistribution,
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("malformed pair file: {0}")]
    Format(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// How the per-type negative budget reacts to the ordering of link types.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativePolicy {
    /// At most `k` negatives per positive of the same type.
    #[default]
    Capped,
    /// Additionally raise each type's target to the previous type's achieved
    /// count when the pool allows, so negative counts never decrease from
    /// within-document to cross-topic. May exceed the per-type cap.
    Monotone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Multiplier for the number of pairs drawn from the largest cluster.
    pub c: f64,
    /// Negatives per positive, per link type.
    pub k: usize,
    pub seed: u64,
    #[serde(default)]
    pub policy: NegativePolicy,
}

impl SamplerConfig {
    pub fn new(c: f64, k: usize, seed: u64) -> Self {
        Self {
            c,
            k,
            seed,
            policy: NegativePolicy::Capped,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(SamplerError::Config(format!(
                "c must be positive, got {}",
                self.c
            )));
        }
        if self.k == 0 {
            return Err(SamplerError::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fraction of all mentions that belong to clusters of size at most `i`.
pub fn cdf(cluster_sizes: &[usize], i: usize) -> Result<f64, SamplerError> {
    let total: usize = cluster_sizes.iter().sum();
    if cluster_sizes.is_empty() || total == 0 {
        return Err(SamplerError::EmptyDistribution);
    }
    let below: usize = cluster_sizes.iter().filter(|&&m| m <= i).sum();
    Ok(below as f64 / total as f64)
}

/// Exactly `c` when `cdf_value` is 1.
pub fn undersample(m: usize, c: f64, cdf_value: f64) -> f64 {
    c + ((m as f64).powf(1.0 - cdf_value) - 1.0)
}

const CEIL_SLACK: f64 = 1e-9;

/// Number of coreferring pairs to draw from a cluster of `m` mentions.
pub fn pairs_coref_count(m: usize, c: f64, cdf_value: f64) -> usize {
    if m < 2 {
        return 0;
    }
    let factor = undersample(m, c, cdf_value).min(m as f64 / 2.0);
    // Products within rounding noise of an integer count as that integer.
    let n = ((m - 1) as f64 * factor - CEIL_SLACK).ceil();
    let all = m * (m - 1) / 2;
    if n <= 0.0 {
        0
    } else {
        (n as usize).min(all)
    }
}

/// One labeled training pair; `a` precedes `b` in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MentionPair {
    pub a: ActionRef,
    pub b: ActionRef,
    pub link_type: LinkType,
    pub label: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub positives: usize,
    pub negative_target: usize,
    pub negatives: usize,
    pub pool: u64,
    pub exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus_id: String,
    pub config: SamplerConfig,
    pub per_type: BTreeMap<LinkType, TypeCounts>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSet {
    pub pairs: Vec<MentionPair>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    a: String,
    b: String,
    link_type: LinkType,
    label: bool,
}

#[derive(Serialize, Deserialize)]
struct HeaderRecord {
    header: Provenance,
}

impl PairSet {
    pub fn positives(&self) -> impl Iterator<Item = &MentionPair> {
        self.pairs.iter().filter(|p| p.label)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &MentionPair> {
        self.pairs.iter().filter(|p| !p.label)
    }

    pub fn count(&self, t: LinkType, label: bool) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.link_type == t && p.label == label)
            .count()
    }

    /// Header line followed by one record per pair.
    pub fn to_jsonl(&self, corpus: &Corpus) -> String {
        let mut out = serde_json::to_string(&HeaderRecord {
            header: self.provenance.clone(),
        })
        .expect("header serializes");
        out.push('\n');
        for p in &self.pairs {
            let rec = PairRecord {
                a: corpus.mention_key(p.a),
                b: corpus.mention_key(p.b),
                link_type: p.link_type,
                label: p.label,
            };
            out.push_str(&serde_json::to_string(&rec).expect("pair serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, corpus: &Corpus) -> Result<Self, SamplerError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| SamplerError::Format("missing header record".into()))?;
        let header: HeaderRecord =
            serde_json::from_str(header).map_err(|e| SamplerError::Format(e.to_string()))?;
        let mut pairs = Vec::new();
        for line in lines {
            let rec: PairRecord =
                serde_json::from_str(line).map_err(|e| SamplerError::Format(e.to_string()))?;
            pairs.push(MentionPair {
                a: corpus.find_action(&rec.a)?,
                b: corpus.find_action(&rec.b)?,
                link_type: rec.link_type,
                label: rec.label,
            });
        }
        Ok(PairSet {
            pairs,
            provenance: header.header,
        })
    }
}

/// Index of the action mentions of a corpus, grouped along the hierarchy.
struct PairSpace {
    actions: Vec<ActionRef>,
    cluster: Vec<usize>,
    doc: Vec<usize>,
    subtopic: Vec<usize>,
    topic: Vec<usize>,
}

impl PairSpace {
    fn new(corpus: &Corpus) -> Self {
        let actions = corpus.actions();
        let intern = |map: &mut HashMap<String, usize>, key: String| {
            let n = map.len();
            *map.entry(key).or_insert(n)
        };
        let (mut cm, mut sm, mut tm) = (HashMap::new(), HashMap::new(), HashMap::new());
        let mut space = PairSpace {
            actions: actions.clone(),
            cluster: vec![],
            doc: vec![],
            subtopic: vec![],
            topic: vec![],
        };
        for &r in &actions {
            let d = corpus.document(r);
            space.cluster.push(intern(&mut cm, corpus.gold_cluster(r)));
            space.doc.push(r.doc);
            space
                .subtopic
                .push(intern(&mut sm, format!("{}\u{1f}{}", d.topic, d.subtopic)));
            space.topic.push(intern(&mut tm, d.topic.clone()));
        }
        space
    }

    fn link_type(&self, i: usize, j: usize) -> LinkType {
        if self.doc[i] == self.doc[j] {
            LinkType::WithinDocument
        } else if self.subtopic[i] == self.subtopic[j] {
            LinkType::WithinSubtopic
        } else if self.topic[i] == self.topic[j] {
            LinkType::CrossSubtopic
        } else {
            LinkType::CrossTopic
        }
    }

    /// Groups whose internal pairs contain all pairs of type `t` (and only
    /// pairs of type `t` or closer).
    fn groups(&self, t: LinkType) -> Vec<Vec<usize>> {
        let key: &[usize] = match t {
            LinkType::WithinDocument => &self.doc,
            LinkType::WithinSubtopic => &self.subtopic,
            LinkType::CrossSubtopic => &self.topic,
            LinkType::CrossTopic => return vec![(0..self.actions.len()).collect()],
        };
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &g) in key.iter().enumerate() {
            groups.entry(g).or_default().push(i);
        }
        groups.into_values().collect()
    }

    fn is_negative_of_type(&self, i: usize, j: usize, t: LinkType) -> bool {
        self.cluster[i] != self.cluster[j] && self.link_type(i, j) == t
    }

    fn pool_size(&self, t: LinkType) -> u64 {
        let mut n = 0u64;
        for g in self.groups(t) {
            for (x, &i) in g.iter().enumerate() {
                for &j in &g[x + 1..] {
                    if self.is_negative_of_type(i, j, t) {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    fn enumerate(&self, t: LinkType) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for g in self.groups(t) {
            for (x, &i) in g.iter().enumerate() {
                for &j in &g[x + 1..] {
                    if self.is_negative_of_type(i, j, t) {
                        out.push((i, j));
                    }
                }
            }
        }
        out
    }

    /// Uniform draws from the negative pool of type `t` by rejection: pick a
    /// group proportionally to its pair count, then a uniform pair inside it.
    fn draw(
        &self,
        t: LinkType,
        n: usize,
        rng: &mut ChaCha8Rng,
        taken: &mut HashSet<(usize, usize)>,
    ) -> Vec<(usize, usize)> {
        let groups = self.groups(t);
        let weights: Vec<u64> = groups
            .iter()
            .map(|g| (g.len() as u64) * (g.len() as u64).saturating_sub(1) / 2)
            .collect();
        let total: u64 = weights.iter().sum();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let mut pick = rng.gen_range(0..total);
            let mut gi = 0;
            while pick >= weights[gi] {
                pick -= weights[gi];
                gi += 1;
            }
            let g = &groups[gi];
            let x = rng.gen_range(0..g.len());
            let y = rng.gen_range(0..g.len() - 1);
            let y = if y >= x { y + 1 } else { y };
            let (i, j) = (g[x.min(y)], g[x.max(y)]);
            if self.is_negative_of_type(i, j, t) && taken.insert((i, j)) {
                out.push((i, j));
            }
        }
        out
    }
}

/// Pools at least this large relative to the target are sampled by rejection
/// instead of enumeration.
const REJECTION_FACTOR: u64 = 4;
const ENUMERATION_LIMIT: u64 = 250_000;

/// Draws a labeled training pair set from one (already filtered) corpus split.
pub fn sample_pairs(corpus: &Corpus, config: &SamplerConfig) -> Result<PairSet, SamplerError> {
    config.validate()?;
    let space = PairSpace::new(corpus);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in space.cluster.iter().enumerate() {
        members.entry(c).or_default().push(i);
    }
    let sizes: Vec<usize> = members.values().map(Vec::len).collect();

    let mut pairs = Vec::new();
    let mut positives = [0usize; 4];
    if !sizes.is_empty() {
        for group in members.values() {
            let m = group.len();
            let want = pairs_coref_count(m, config.c, cdf(&sizes, m)?);
            if want == 0 {
                continue;
            }
            let all = m * (m - 1) / 2;
            for flat in index::sample(&mut rng, all, want).into_vec() {
                let (x, y) = unrank_pair(flat, m);
                let (i, j) = (group[x], group[y]);
                let t = space.link_type(i, j);
                positives[t.index()] += 1;
                pairs.push((i, j, t, true));
            }
        }
    }

    let mut per_type = BTreeMap::new();
    let mut taken = HashSet::new();
    let mut previous = 0usize;
    for t in LinkType::ALL {
        let pool = space.pool_size(t);
        let cap = config.k * positives[t.index()];
        let target = match config.policy {
            NegativePolicy::Capped => cap,
            NegativePolicy::Monotone => cap.max(previous),
        };
        let achieved = (target as u64).min(pool) as usize;
        let chosen: Vec<(usize, usize)> = if achieved == 0 {
            vec![]
        } else if pool > ENUMERATION_LIMIT && pool >= REJECTION_FACTOR * achieved as u64 {
            space.draw(t, achieved, &mut rng, &mut taken)
        } else {
            let cands = space.enumerate(t);
            index::sample(&mut rng, cands.len(), achieved)
                .into_iter()
                .map(|x| cands[x])
                .collect()
        };
        for (i, j) in chosen {
            pairs.push((i, j, t, false));
        }
        per_type.insert(
            t,
            TypeCounts {
                positives: positives[t.index()],
                negative_target: target,
                negatives: achieved,
                pool,
                exhausted: (target as u64) > pool,
            },
        );
        previous = achieved;
    }

    let pairs = pairs
        .into_iter()
        .map(|(i, j, link_type, label)| {
            let (a, b) = (space.actions[i], space.actions[j]);
            let (a, b) = if i < j { (a, b) } else { (b, a) };
            MentionPair {
                a,
                b,
                link_type,
                label,
            }
        })
        .collect();
    Ok(PairSet {
        pairs,
        provenance: Provenance {
            corpus_id: corpus.corpus_id.clone(),
            config: config.clone(),
            per_type,
        },
    })
}

/// Maps a flat index in `0..C(m,2)` to the pair `(x, y)` with `x < y`.
fn unrank_pair(mut flat: usize, m: usize) -> (usize, usize) {
    for x in 0..m {
        let row = m - 1 - x;
        if flat < row {
            return (x, x + 1 + flat);
        }
        flat -= row;
    }
    unreachable!("pair index out of range")
}
