//! L1-penalised logistic regression fitted by proximal gradient descent.
//!
//! Objective on standardized features `x`:
//!
//! ```text
//! F(w, b) = 1/n Σ [softplus(x_i·w + b) − y_i (x_i·w + b)] + λ ‖w‖₁
//! ```
//!
//! The intercept is not penalised. Each iteration takes a gradient step on
//! the smooth part, soft-thresholds the weights, and backtracks on the step
//! size until the quadratic upper bound holds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Stationarity tolerance on the proximal gradient mapping (sup norm).
const STATIONARITY_TOL: f64 = 1e-7;

/// Per-feature affine standardization `(x - mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Always positive; constant columns get 1.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map(Vec::len).ok_or_else(|| {
            Error::DegenerateData("cannot standardize an empty sample".into())
        })?;
        let mut means = vec![0.0; d];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut stds = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                stds[j] += (r[j] - means[j]).powi(2);
            }
        }
        for s in &mut stds {
            *s = (*s / n as f64).sqrt();
            if !(*s > 1e-12) {
                *s = 1.0;
            }
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(z, (m, s))| z * s + m)
            .collect()
    }
}

/// Numerically stable `ln(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Logistic problem on already standardized rows with 0/1 targets.
#[derive(Debug, Clone)]
pub struct LogisticProblem<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
    pub lambda: f64,
}

impl LogisticProblem<'_> {
    fn margin(&self, i: usize, w: &[f64], b: f64) -> f64 {
        self.x[i].iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b
    }

    /// Mean logistic loss (the smooth part of the objective).
    pub fn smooth_loss(&self, w: &[f64], b: f64) -> f64 {
        let n = self.x.len() as f64;
        (0..self.x.len())
            .map(|i| {
                let z = self.margin(i, w, b);
                softplus(z) - self.y[i] * z
            })
            .sum::<f64>()
            / n
    }

    /// Gradient of [`Self::smooth_loss`] as `(dw, db)`.
    pub fn smooth_gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.x.len() as f64;
        let mut gw = vec![0.0; w.len()];
        let mut gb = 0.0;
        for i in 0..self.x.len() {
            let r = sigmoid(self.margin(i, w, b)) - self.y[i];
            gb += r;
            for (g, a) in gw.iter_mut().zip(&self.x[i]) {
                *g += r * a;
            }
        }
        gw.iter_mut().for_each(|g| *g /= n);
        (gw, gb / n)
    }

    pub fn objective(&self, w: &[f64], b: f64) -> f64 {
        self.smooth_loss(w, b) + self.lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Largest violation of the optimality conditions at `(w, b)`.
    pub fn kkt_residual(&self, w: &[f64], b: f64) -> f64 {
        let (gw, gb) = self.smooth_gradient(w, b);
        gw.iter()
            .zip(w)
            .map(|(&g, &wj)| {
                if wj != 0.0 {
                    (g + self.lambda * wj.signum()).abs()
                } else {
                    (g.abs() - self.lambda).max(0.0)
                }
            })
            .fold(gb.abs(), f64::max)
    }

    /// Smallest λ for which all weights are zero at the optimum.
    pub fn lambda_max(&self) -> f64 {
        let n = self.x.len() as f64;
        let ybar = self.y.iter().sum::<f64>() / n;
        let d = self.x.first().map_or(0, Vec::len);
        (0..d)
            .map(|j| {
                (self
                    .x
                    .iter()
                    .zip(self.y)
                    .map(|(r, y)| r[j] * (y - ybar))
                    .sum::<f64>()
                    / n)
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub objective: f64,
}

/// Proximal gradient (ISTA) with backtracking.
///
/// Stops once an iteration lowers the objective by less than `tol` and the
/// proximal gradient mapping is below the stationarity tolerance.
pub fn fit_l1_logistic(problem: &LogisticProblem<'_>, tol: f64, max_iter: usize) -> Result<Fit> {
    let d = problem.x.first().map_or(0, Vec::len);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut lipschitz = 1.0f64;
    let mut f = problem.smooth_loss(&w, b);
    let l1 = |w: &[f64]| w.iter().map(|v| v.abs()).sum::<f64>();
    for it in 1..=max_iter {
        let (gw, gb) = problem.smooth_gradient(&w, b);
        let total = f + problem.lambda * l1(&w);
        lipschitz = (lipschitz * 0.5).max(1e-8);
        let (w_next, b_next, f_next) = loop {
            let step = 1.0 / lipschitz;
            let wn: Vec<f64> = w
                .iter()
                .zip(&gw)
                .map(|(wj, gj)| soft_threshold(wj - step * gj, step * problem.lambda))
                .collect();
            let bn = b - step * gb;
            let fn_ = problem.smooth_loss(&wn, bn);
            let mut lin = (bn - b) * gb;
            let mut sq = (bn - b).powi(2);
            for j in 0..d {
                let dj = wn[j] - w[j];
                lin += dj * gw[j];
                sq += dj * dj;
            }
            if fn_ <= f + lin + 0.5 * lipschitz * sq + 1e-15 || lipschitz > 1e15 {
                break (wn, bn, fn_);
            }
            lipschitz *= 2.0;
        };
        let mapping = w_next
            .iter()
            .zip(&w)
            .map(|(a, c)| (a - c).abs())
            .fold((b_next - b).abs(), f64::max)
            * lipschitz;
        let total_next = f_next + problem.lambda * l1(&w_next);
        w = w_next;
        b = b_next;
        f = f_next;
        if total - total_next < tol && mapping < STATIONARITY_TOL {
            return Ok(Fit {
                objective: total_next,
                weights: w,
                intercept: b,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x = vec![
            vec![0.5, -1.0],
            vec![1.5, 0.2],
            vec![-0.3, 0.8],
            vec![-1.2, -0.4],
            vec![0.1, 0.1],
            vec![2.0, -0.7],
        ];
        let y = vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        (x, y)
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn standardizer_round_trip() {
        let (x, _) = toy();
        let s = Standardizer::fit(&x).unwrap();
        for r in &x {
            let back = s.invert(&s.apply(r));
            for (a, b) in back.iter().zip(r) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn lambda_above_max_zeroes_weights() {
        let (x, y) = toy();
        let p = LogisticProblem { x: &x, y: &y, lambda: 0.0 };
        let lmax = p.lambda_max();
        let p = LogisticProblem { x: &x, y: &y, lambda: lmax * 1.01 };
        let fit = fit_l1_logistic(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.weights.iter().all(|&w| w == 0.0));
        let prior: f64 = 0.5;
        assert!((fit.intercept - (prior / (1.0 - prior)).ln()).abs() < 1e-6);
        assert!(p.kkt_residual(&fit.weights, fit.intercept) < 1e-6);
    }

    #[test]
    fn small_lambda_reaches_kkt() {
        let (x, y) = toy();
        let p = LogisticProblem { x: &x, y: &y, lambda: 0.01 };
        let fit = fit_l1_logistic(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(p.kkt_residual(&fit.weights, fit.intercept) < 1e-6);
    }
}
