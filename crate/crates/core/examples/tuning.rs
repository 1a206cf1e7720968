//! Budgeted random search over a custom space, then over the clustering
//! space with the objective evaluated on a held-out split.

use cdcr::clustering::{agglomerative, ClusterConfig, DistanceMatrix};
use cdcr::harness::{apply_trial, random_search, Domain, SearchSpace};
use cdcr::metrics::lea;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A toy objective with its optimum at x = 0.3, y = 4.
    let space = SearchSpace::new([
        (
            "x",
            Domain::Uniform {
                low: 0.0,
                high: 1.0,
            },
        ),
        ("y", Domain::Int { low: 1, high: 8 }),
    ]);
    let result = random_search(&space, 64, 0, |t| {
        let x = t["x"].as_f64().unwrap_or_default();
        let y = t["y"].as_i64().unwrap_or_default() as f64;
        Ok(-(x - 0.3).powi(2) - 0.01 * (y - 4.0).powi(2))
    })?;
    println!("best toy trial {:?} score {:?}", result.best, result.score);

    // Noisy block distances around three true clusters of eight points.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 24;
    let truth: Vec<usize> = (0..n).map(|i| i / 8).collect();
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let noise: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-0.25..0.25)).collect();
    let matrix = DistanceMatrix::from_fn(ids.clone(), |i, j| {
        let base = if truth[i] == truth[j] { 0.3 } else { 0.7 };
        (base + noise[i * n + j]).clamp(0.0, 1.0)
    });
    let key: Vec<Vec<usize>> = (0..3)
        .map(|c| (0..n).filter(|&i| truth[i] == c).collect())
        .collect();
    let base = ClusterConfig::distance(cdcr::clustering::Linkage::Single, 0.5);
    let result = random_search(&SearchSpace::clustering(), 57, 0, |t| {
        let config: ClusterConfig = apply_trial(&base, t)?;
        let labels = agglomerative(&matrix, &config)?;
        let response: Vec<Vec<usize>> = (0..=*labels.iter().max().unwrap_or(&0))
            .map(|c| (0..n).filter(|&i| labels[i] == c).collect())
            .collect();
        Ok(lea(&key, &response).f1)
    })?;
    let best: ClusterConfig = apply_trial(&base, &result.best)?;
    println!(
        "best clustering {best:?} LEA F1 {:.3}",
        result.score.unwrap_or_default()
    );
    Ok(())
}
