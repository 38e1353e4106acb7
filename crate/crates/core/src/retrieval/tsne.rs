//! Exact t-SNE.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub early_exaggeration: f64,
    pub early_exaggeration_iters: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            early_exaggeration: 12.0,
            early_exaggeration_iters: 250,
            learning_rate: 200.0,
            seed: 0,
        }
    }
}

const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTION: usize = 200;
const P_FLOOR: f64 = 1e-12;
const MOMENTUM_SWITCH: usize = 250;
const MIN_GAIN: f64 = 0.01;
const INIT_SIGMA: f64 = 1e-4;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Conditional distribution of one row for precision `beta`, and its
/// Shannon entropy (nats).
fn row_distribution(dist: &[f64], i: usize, beta: f64) -> (Vec<f64>, f64) {
    let dmin = dist
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = dist
        .iter()
        .enumerate()
        .map(|(j, d)| if j == i { 0.0 } else { (-(d - dmin) * beta).exp() })
        .collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    let h = -p.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum::<f64>();
    (p, h)
}

/// Symmetric joint probabilities (dense, row-major `n×n`) with each row's
/// Gaussian calibrated by bisection to the requested perplexity.
pub fn joint_probabilities(data: &[Vec<f64>], perplexity: f64) -> Result<Vec<f64>> {
    let n = data.len();
    if n < 4 {
        return Err(Error::TooFewPoints(format!("t-SNE needs at least 4 points, got {n}")));
    }
    if !(perplexity > 0.0) || perplexity * 3.0 >= n as f64 {
        return Err(Error::PerplexityTooLarge { perplexity, points: n });
    }
    let target = perplexity.ln();
    let cond: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist: Vec<f64> = data.iter().map(|x| sq_dist(&data[i], x)).collect();
            let (mut lo, mut hi, mut beta) = (0.0f64, f64::INFINITY, 1.0f64);
            let (mut p, mut h) = row_distribution(&dist, i, beta);
            for _ in 0..MAX_BISECTION {
                if (h - target).abs() < ENTROPY_TOL {
                    break;
                }
                if h > target {
                    lo = beta;
                    beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
                } else {
                    hi = beta;
                    beta = (beta + lo) / 2.0;
                }
                (p, h) = row_distribution(&dist, i, beta);
            }
            p
        })
        .collect();
    let mut joint = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                joint[i * n + j] = ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(P_FLOOR);
            }
        }
    }
    Ok(joint)
}

/// Student-t kernel values `1 / (1 + |y_i - y_j|²)` and their sum over i ≠ j.
fn kernel(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut w = vec![0.0; n * n];
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let v = 1.0 / (1.0 + (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2));
            w[i * n + j] = v;
            w[j * n + i] = v;
            z += 2.0 * v;
        }
    }
    (w, z)
}

/// KL(P || Q) for a symmetric joint `p` (row-major n×n) and layout `y`.
pub fn tsne_objective(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let (w, z) = kernel(y);
    p.iter()
        .zip(&w)
        .filter(|(pv, _)| **pv > 0.0)
        .map(|(pv, wv)| pv * (pv / (wv / z)).ln())
        .sum()
}

/// Gradient of [`tsne_objective`] with respect to `y`.
pub fn tsne_gradient(p: &[f64], y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut grad = vec![[0.0; 2]; y.len()];
    let mut w = vec![0.0; y.len() * y.len()];
    gradient_into(p, y, &mut w, &mut grad);
    grad
}

/// Gradient with caller-owned scratch; `p` must be symmetric.
fn gradient_into(p: &[f64], y: &[[f64; 2]], w: &mut [f64], grad: &mut [[f64; 2]]) {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let v = 1.0 / (1.0 + (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2));
            w[i * n + j] = v;
            z += 2.0 * v;
        }
    }
    grad.iter_mut().for_each(|g| *g = [0.0; 2]);
    for i in 0..n {
        for j in i + 1..n {
            let v = w[i * n + j];
            let m = 4.0 * (p[i * n + j] - v / z) * v;
            let d = [m * (y[i][0] - y[j][0]), m * (y[i][1] - y[j][1])];
            grad[i][0] += d[0];
            grad[i][1] += d[1];
            grad[j][0] -= d[0];
            grad[j][1] -= d[1];
        }
    }
}

pub fn tsne_embed(data: &[Vec<f64>], cfg: &TsneConfig) -> Result<Vec<[f64; 2]>> {
    if !(cfg.learning_rate > 0.0) || !(cfg.early_exaggeration >= 1.0) {
        return Err(Error::InvalidConfig(format!("bad t-SNE config {cfg:?}")));
    }
    let p = joint_probabilities(data, cfg.perplexity)?;
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, INIT_SIGMA).expect("valid sigma");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let exaggerated: Vec<f64> = p.iter().map(|v| v * cfg.early_exaggeration).collect();
    let mut grad = vec![[0.0; 2]; n];
    let mut scratch = vec![0.0; n * n];

    for it in 0..cfg.iterations {
        let pk = if it < cfg.early_exaggeration_iters { &exaggerated } else { &p };
        let momentum = if it < MOMENTUM_SWITCH { 0.5 } else { 0.8 };
        gradient_into(pk, &y, &mut scratch, &mut grad);
        for i in 0..n {
            for c in 0..2 {
                let g = &mut gains[i][c];
                *g = if (grad[i][c] > 0.0) != (update[i][c] > 0.0) { *g + 0.2 } else { *g * 0.8 };
                *g = g.max(MIN_GAIN);
                update[i][c] = momentum * update[i][c] - cfg.learning_rate * *g * grad[i][c];
                y[i][c] += update[i][c];
            }
        }
        for c in 0..2 {
            let mean = y.iter().map(|v| v[c]).sum::<f64>() / n as f64;
            y.iter_mut().for_each(|v| v[c] -= mean);
        }
    }
    if y.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(Error::NoConvergence(cfg.iterations));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<Vec<f64>> {
        (0..20)
            .map(|i| {
                let base = if i < 10 { 0.0 } else { 100.0 };
                vec![base + (i % 10) as f64 * 0.1, base - (i % 3) as f64 * 0.1, (i % 7) as f64 * 0.05]
            })
            .collect()
    }

    #[test]
    fn rows_hit_target_perplexity() {
        let data = blobs();
        let p = joint_probabilities(&data, 5.0).unwrap();
        let n = data.len();
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
        for i in 0..n {
            assert!((p[i * n + (i + 1) % n] - p[((i + 1) % n) * n + i]).abs() < 1e-15);
        }
    }

    #[test]
    fn perplexity_limit() {
        let data = blobs();
        assert!(matches!(
            joint_probabilities(&data, 7.0),
            Err(Error::PerplexityTooLarge { .. })
        ));
        assert!(matches!(joint_probabilities(&data[..3], 0.5), Err(Error::TooFewPoints(_))));
    }

    #[test]
    fn separates_blobs_deterministically() {
        let cfg = TsneConfig {
            perplexity: 5.0,
            ..TsneConfig::default()
        };
        let y = tsne_embed(&blobs(), &cfg).unwrap();
        let d = |a: usize, b: usize| ((y[a][0] - y[b][0]).powi(2) + (y[a][1] - y[b][1]).powi(2)).sqrt();
        let within = (0..20)
            .flat_map(|a| (0..20).map(move |b| (a, b)))
            .filter(|(a, b)| (a < &10) == (b < &10))
            .map(|(a, b)| d(a, b))
            .fold(0.0, f64::max);
        let between = (0..10)
            .flat_map(|a| (10..20).map(move |b| (a, b)))
            .map(|(a, b)| d(a, b))
            .fold(f64::INFINITY, f64::min);
        assert!(within < between, "{within} vs {between}");
        assert_eq!(y, tsne_embed(&blobs(), &cfg).unwrap());
    }
}
