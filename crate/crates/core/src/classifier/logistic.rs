//! L2-regularized logistic regression by full-batch gradient descent.
//!
//! Every feature becomes two inputs, its value (0 when absent) and a presence
//! flag. Inputs are standardized with training statistics; constant columns
//! standardize to 0.

use serde::{Deserialize, Serialize};

use super::sigmoid;
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            learning_rate: 0.5,
            epochs: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Per expanded input: mean and standard deviation used for scaling.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Expanded, unscaled inputs of one row: `[v0, p0, v1, p1, ...]`.
pub fn expand(row: impl Iterator<Item = Option<f64>>) -> Vec<f64> {
    row.flat_map(|v| match v {
        Some(x) => [x, 1.0],
        None => [0.0, 0.0],
    })
    .collect()
}

/// Mean log-loss plus `l2 / 2 · ‖w‖²` and its gradient `(∂w, ∂b)`.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: f64,
    x: &[Vec<f64>],
    y: &[f64],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &t) in x.iter().zip(y) {
        let z = bias + row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        // log(1 + e^z) − t·z, computed stably.
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
        let r = sigmoid(z) - t;
        for (g, a) in gw.iter_mut().zip(row) {
            *g += r * a;
        }
        gb += r;
    }
    let reg: f64 = weights.iter().map(|w| w * w).sum::<f64>() * l2 / 2.0;
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss / n + reg, gw, gb / n)
}

impl LinearModel {
    pub fn fit(matrix: &FeatureMatrix, labels: &[bool], params: &LogRegParams) -> Self {
        let raw: Vec<Vec<f64>> = matrix
            .rows
            .iter()
            .map(|r| expand(r.values.iter().copied()))
            .collect();
        let d = 2 * matrix.schema.len();
        let n = raw.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in &raw {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut scale = vec![0.0; d];
        for r in &raw {
            for ((s, x), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (x - m).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { s.sqrt() } else { 0.0 };
        }
        let mut model = LinearModel {
            mean,
            scale,
            weights: vec![0.0; d],
            bias: 0.0,
        };
        let x: Vec<Vec<f64>> = raw.iter().map(|r| model.standardize(r)).collect();
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        for _ in 0..params.epochs {
            let (_, gw, gb) = loss_and_gradient(&model.weights, model.bias, &x, &y, params.l2);
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= params.learning_rate * g;
            }
            model.bias -= params.learning_rate * gb;
        }
        model
    }

    fn standardize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }

    pub fn margin(&self, row: impl Iterator<Item = Option<f64>>) -> f64 {
        let x = self.standardize(&expand(row));
        self.bias + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    /// Per-feature magnitude: |value weight| + |presence weight| on the
    /// standardized scale (equivalently |coefficient| · std).
    pub fn importances(&self) -> Vec<f64> {
        self.weights
            .chunks(2)
            .map(|c| c[0].abs() + c[1].abs())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let d = rng.gen_range(1..6);
            let x: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<f64> = (0..20).map(|_| rng.gen_range(0..2) as f64).collect();
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = rng.gen_range(-1.0..1.0);
            let (_, gw, gb) = loss_and_gradient(&w, b, &x, &y, 0.1);
            let h = 1e-6;
            for j in 0..d {
                let mut wp = w.clone();
                wp[j] += h;
                let mut wm = w.clone();
                wm[j] -= h;
                let fd = (loss_and_gradient(&wp, b, &x, &y, 0.1).0
                    - loss_and_gradient(&wm, b, &x, &y, 0.1).0)
                    / (2.0 * h);
                assert!((fd - gw[j]).abs() / fd.abs().max(gw[j].abs()).max(1e-6) < 1e-5);
            }
            let fd = (loss_and_gradient(&w, b + h, &x, &y, 0.1).0
                - loss_and_gradient(&w, b - h, &x, &y, 0.1).0)
                / (2.0 * h);
            assert!((fd - gb).abs() / fd.abs().max(gb.abs()).max(1e-6) < 1e-5);
        }
    }
}
