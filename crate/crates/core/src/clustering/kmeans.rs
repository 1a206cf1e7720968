//! Document preclustering by k-means over tf-idf vectors, with k chosen by
//! silhouette.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{silhouette, ClusterError, Clustering};
use crate::corpus::Document;
use crate::features::tfidf::{document_tokens, SparseVector, TfIdfModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Upper end of the k search; `None` searches up to n − 1.
    pub max_k: Option<usize>,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
            max_k: None,
        }
    }
}

struct Points {
    vectors: Vec<SparseVector>,
    dim: usize,
}

impl Points {
    /// Squared Euclidean distance of unit point `i` to a dense centroid.
    fn sq_dist(&self, i: usize, c: &[f64], c_norm2: f64) -> f64 {
        let dot: f64 = self.vectors[i]
            .entries()
            .iter()
            .map(|&(t, w)| w * c[t as usize])
            .sum();
        let norm = if self.vectors[i].entries().is_empty() {
            0.0
        } else {
            1.0
        };
        (norm - 2.0 * dot + c_norm2).max(0.0)
    }

    fn dense(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(t, w) in self.vectors[i].entries() {
            v[t as usize] = w;
        }
        v
    }
}

fn norm2(c: &[f64]) -> f64 {
    c.iter().map(|x| x * x).sum()
}

/// k-means++ seeding; `None` when fewer than `k` distinct points exist.
fn seed_centroids(points: &Points, k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<f64>>> {
    let n = points.vectors.len();
    let mut centroids = vec![points.dense(rng.gen_range(0..n))];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| points.sq_dist(i, &centroids[0], norm2(&centroids[0])))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 1e-12 {
            return None;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        let c = points.dense(pick);
        let cn = norm2(&c);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(points.sq_dist(i, &c, cn));
        }
        centroids.push(c);
    }
    Some(centroids)
}

/// One Lloyd run; returns labels and inertia.
fn lloyd(
    points: &Points,
    k: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<usize>, f64)> {
    let n = points.vectors.len();
    let mut centroids = seed_centroids(points, k, rng)?;
    let mut labels = vec![usize::MAX; n];
    let mut inertia = 0.0;
    for _ in 0..max_iter {
        let norms: Vec<f64> = centroids.iter().map(|c| norm2(c)).collect();
        let mut changed = false;
        inertia = 0.0;
        for (i, label) in labels.iter_mut().enumerate() {
            let (best, d) = (0..k)
                .map(|c| (c, points.sq_dist(i, &centroids[c], norms[c])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("k >= 1");
            inertia += d;
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; points.dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for &(t, w) in points.vectors[i].entries() {
                sums[l][t as usize] += w;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    Some((labels, inertia))
}

fn compact(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Result of the k search.
#[derive(Clone, Debug, PartialEq)]
pub struct KMeansSelection {
    pub labels: Vec<usize>,
    pub k: usize,
    pub silhouette: Option<f64>,
}

/// Runs seeded k-means for every k in `2..=min(n − 1, max_k)` and keeps the
/// labelling with the highest cosine silhouette (ties go to the smaller k).
/// Identical documents collapse to one cluster.
pub fn kmeans_select(
    vectors: Vec<SparseVector>,
    dim: usize,
    seed: u64,
    config: &KMeansConfig,
) -> Result<KMeansSelection, ClusterError> {
    let n = vectors.len();
    if n < 3 {
        return Err(ClusterError::TooFewDocuments(n));
    }
    let points = Points { vectors, dim };
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| points.vectors[i].cosine_distance(&points.vectors[j]))
                .collect()
        })
        .collect();
    let single = KMeansSelection {
        labels: vec![0; n],
        k: 1,
        silhouette: None,
    };
    let k_max = config.max_k.unwrap_or(n - 1).min(n - 1);
    let candidates: Vec<KMeansSelection> = (2..=k_max)
        .into_par_iter()
        .filter_map(|k| {
            let best = (0..config.restarts.max(1))
                .filter_map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 32) ^ r as u64);
                    lloyd(&points, k, config.max_iter, &mut rng)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))?;
            let labels = compact(&best.0);
            let s = silhouette(&labels, |i, j| dist[i][j]).ok()?;
            Some(KMeansSelection {
                k: labels.iter().max().map_or(1, |m| m + 1),
                labels,
                silhouette: Some(s),
            })
        })
        .collect();
    let mut best: Option<KMeansSelection> = None;
    for c in candidates {
        if best.as_ref().map_or(true, |b| c.silhouette > b.silhouette) {
            best = Some(c);
        }
    }
    Ok(best.unwrap_or(single))
}

/// Preclusters documents by their tf-idf vectors.
pub fn kmeans_precluster(
    documents: &[Document],
    tfidf: &TfIdfModel,
    seed: u64,
    config: &KMeansConfig,
) -> Result<Clustering, ClusterError> {
    let vectors: Vec<SparseVector> = documents
        .iter()
        .map(|d| {
            tfidf
                .vectorize(document_tokens(d))
                .unwrap_or_else(SparseVector::empty)
        })
        .collect();
    let selection = kmeans_select(vectors, tfidf.vocabulary_size(), seed, config)?;
    let ids: Vec<String> = documents.iter().map(|d| d.doc_id.clone()).collect();
    Ok(Clustering::from_labels(&ids, &selection.labels))
}
