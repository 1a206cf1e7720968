//! Mention clustering over pairwise distances and document preclustering.

pub mod kmeans;

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::metrics::conll::write_conll;
pub use kmeans::{kmeans_precluster, KMeansConfig};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("maxclust {k} is outside 1..={n}")]
    MaxClust { k: usize, n: usize },
    #[error("distance threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("k-means preclustering needs at least 3 documents, got {0}")]
    TooFewDocuments(usize),
    #[error("invalid partition: {0}")]
    Invalid(String),
}

/// Symmetric distances with zero diagonal, stored as the condensed upper
/// triangle in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    condensed: Vec<f64>,
}

fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    n * i - i * (i + 1) / 2 + j - i - 1
}

impl DistanceMatrix {
    /// Evaluates `distance(i, j)` once per unordered pair with `i < j`.
    pub fn from_fn(ids: Vec<String>, distance: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let n = ids.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let condensed = pairs.par_iter().map(|&(i, j)| distance(i, j)).collect();
        Self { ids, condensed }
    }

    pub fn from_condensed(ids: Vec<String>, condensed: Vec<f64>) -> Self {
        let n = ids.len();
        assert_eq!(
            condensed.len(),
            n * n.saturating_sub(1) / 2,
            "condensed length"
        );
        Self { ids, condensed }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn condensed(&self) -> &[f64] {
        &self.condensed
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.condensed[condensed_index(self.len(), i, j)]
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    Average,
}

impl Linkage {
    pub const ALL: [Linkage; 3] = [Linkage::Single, Linkage::Complete, Linkage::Average];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Distance,
    MaxClust,
}

/// `threshold` is a distance in `[0, 1]` for [`Criterion::Distance`] and a
/// cluster count (rounded) for [`Criterion::MaxClust`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub linkage: Linkage,
    pub criterion: Criterion,
    pub threshold: f64,
}

impl ClusterConfig {
    pub fn distance(linkage: Linkage, threshold: f64) -> Self {
        Self {
            linkage,
            criterion: Criterion::Distance,
            threshold,
        }
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }

    /// Component label per element, numbered by first occurrence.
    pub fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut relabel = HashMap::new();
        (0..n)
            .map(|i| {
                let root = self.find(i);
                let next = relabel.len();
                *relabel.entry(root).or_insert(next)
            })
            .collect()
    }
}

/// Connected components of `edges` over `0..n`.
pub fn transitive_closure(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut uf = UnionFind::new(n);
    for (a, b) in edges {
        uf.union(a, b);
    }
    uf.labels()
}

fn kodama_method(l: Linkage) -> kodama::Method {
    match l {
        Linkage::Single => kodama::Method::Single,
        Linkage::Complete => kodama::Method::Complete,
        Linkage::Average => kodama::Method::Average,
    }
}

/// Bottom-up merging under the configured linkage, cut at the configured
/// criterion. Returns one label per matrix row.
pub fn agglomerative(
    matrix: &DistanceMatrix,
    config: &ClusterConfig,
) -> Result<Vec<usize>, ClusterError> {
    let n = matrix.len();
    let merges = match config.criterion {
        Criterion::Distance => {
            if !(0.0..=1.0).contains(&config.threshold) {
                return Err(ClusterError::Threshold(config.threshold));
            }
            None
        }
        Criterion::MaxClust => {
            let k = config.threshold.round();
            if k < 1.0 || k > n.max(1) as f64 {
                return Err(ClusterError::MaxClust {
                    k: k.max(0.0) as usize,
                    n,
                });
            }
            Some(n - k as usize)
        }
    };
    Ok(cut(matrix, config.linkage, merges, config.threshold))
}

/// Agglomerative clustering at an arbitrary nonnegative distance threshold
/// (distances need not be probabilities).
pub fn agglomerative_at(matrix: &DistanceMatrix, linkage: Linkage, threshold: f64) -> Vec<usize> {
    cut(matrix, linkage, None, threshold)
}

fn cut(
    matrix: &DistanceMatrix,
    linkage: Linkage,
    merges: Option<usize>,
    threshold: f64,
) -> Vec<usize> {
    let n = matrix.len();
    if n < 2 {
        return vec![0; n];
    }
    let mut condensed = matrix.condensed.clone();
    let dendrogram = kodama::linkage(&mut condensed, n, kodama_method(linkage));
    // Observations are nodes 0..n; merge step s creates node n + s.
    let mut uf = UnionFind::new(n);
    let mut rep: Vec<usize> = (0..n).collect();
    for (s, step) in dendrogram.steps().iter().enumerate() {
        let stop = match merges {
            Some(m) => s >= m,
            None => step.dissimilarity > threshold,
        };
        if stop {
            break;
        }
        let (a, b) = (rep[step.cluster1], rep[step.cluster2]);
        uf.union(a, b);
        rep.push(a);
    }
    uf.labels()
}

/// Partition of string ids into disjoint, nonempty clusters, kept in
/// canonical order (members sorted, clusters sorted by first member).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clustering {
    clusters: Vec<Vec<String>>,
}

impl Clustering {
    pub fn new(clusters: Vec<Vec<String>>) -> Result<Self, ClusterError> {
        let mut seen = HashSet::new();
        let mut clusters: Vec<Vec<String>> = clusters
            .into_iter()
            .map(|mut c| {
                c.sort();
                c
            })
            .collect();
        for c in &clusters {
            if c.is_empty() {
                return Err(ClusterError::Invalid("empty cluster".into()));
            }
            for m in c {
                if !seen.insert(m.clone()) {
                    return Err(ClusterError::Invalid(format!("`{m}` appears twice")));
                }
            }
        }
        clusters.sort();
        Ok(Self { clusters })
    }

    pub fn from_labels(ids: &[String], labels: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (id, &l) in ids.iter().zip(labels) {
            groups.entry(l).or_default().push(id.clone());
        }
        Self::new(groups.into_values().collect()).expect("labels form a partition")
    }

    pub fn singletons(ids: &[String]) -> Self {
        Self::new(ids.iter().map(|i| vec![i.clone()]).collect()).expect("distinct ids")
    }

    /// Disjoint union of clusterings over disjoint universes.
    pub fn union(parts: impl IntoIterator<Item = Clustering>) -> Result<Self, ClusterError> {
        Self::new(parts.into_iter().flat_map(|c| c.clusters).collect())
    }

    pub fn clusters(&self) -> &[Vec<String>] {
        &self.clusters
    }

    pub fn into_clusters(self) -> Vec<Vec<String>> {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn items(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Pairs of co-clustered ids.
    pub fn same_cluster(&self, a: &str, b: &str) -> bool {
        self.clusters
            .iter()
            .any(|c| c.iter().any(|x| x == a) && c.iter().any(|x| x == b))
    }

    /// JSON object `{cluster_id: [ids]}` with ids `c0000`, `c0001`, ...
    pub fn to_json(&self) -> String {
        let map: BTreeMap<String, &Vec<String>> = self
            .clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("c{i:04}"), c))
            .collect();
        serde_json::to_string_pretty(&map).expect("clustering serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClusterError> {
        let map: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| ClusterError::Invalid(e.to_string()))?;
        Self::new(map.into_values().collect())
    }

    pub fn to_conll(&self, document: &str) -> String {
        write_conll(document, &self.clusters)
    }
}

/// Documents connected by any gold coreference link, closed transitively.
pub fn gold_preclusters(corpus: &Corpus) -> Clustering {
    let index: HashMap<&str, usize> = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| (d.doc_id.as_str(), i))
        .collect();
    let mut uf = UnionFind::new(corpus.documents.len());
    for cluster in corpus.gold_clusters() {
        for w in cluster.windows(2) {
            uf.union(
                index[corpus.documents[w[0].doc].doc_id.as_str()],
                index[corpus.documents[w[1].doc].doc_id.as_str()],
            );
        }
    }
    let ids: Vec<String> = corpus.documents.iter().map(|d| d.doc_id.clone()).collect();
    Clustering::from_labels(&ids, &uf.labels())
}

/// Mean silhouette with the given distance; points in singleton clusters
/// score 0.
pub fn silhouette(
    labels: &[usize],
    distance: impl Fn(usize, usize) -> f64,
) -> Result<f64, ClusterError> {
    let n = labels.len();
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let mut total = 0.0;
    for i in 0..n {
        if sizes[labels[i]] == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += distance(i, j);
            }
        }
        let a = sums[labels[i]] / (sizes[labels[i]] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i] && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}
