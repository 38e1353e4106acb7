//! Principal component analysis via a symmetric eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit principal axes, one row each, by descending variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Input rows expressed in the principal axes.
    pub projected: Vec<Vec<f64>>,
}

impl Pca {
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, axis) in coords.iter().zip(&self.components) {
            for (o, a) in out.iter_mut().zip(axis) {
                *o += c * a;
            }
        }
        out
    }
}

/// Relative eigenvalue cut below which directions count as absent.
const RANK_TOL: f64 = 1e-10;

/// Projects onto the top `dims` principal axes of the sample covariance.
///
/// Fewer axes are returned when the centered data has lower rank. Each axis
/// is oriented so that its largest-magnitude entry is positive. Works on the
/// `n×n` Gram matrix instead of the `d×d` covariance when `n < d`.
pub fn pca_reduce(rows: &[Vec<f64>], dims: usize) -> Result<Pca> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewPoints(format!("PCA needs at least 2 vectors, got {n}")));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimMismatch("PCA rows must share a non-zero dimension".into()));
    }
    if dims == 0 {
        return Err(Error::InvalidConfig("PCA needs at least one dimension".into()));
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let denom = (n - 1) as f64;

    let mut pairs: Vec<(f64, Vec<f64>)> = if d <= n {
        let cov = x.transpose() * &x / denom;
        let eig = SymmetricEigen::new(cov);
        (0..d)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
            .collect()
    } else {
        let gram = &x * x.transpose() / denom;
        let eig = SymmetricEigen::new(gram);
        (0..n)
            .map(|k| {
                let lambda = eig.eigenvalues[k];
                let axis = x.transpose() * eig.eigenvectors.column(k);
                let norm = axis.norm();
                let axis: Vec<f64> = if norm > 0.0 { axis.iter().map(|v| v / norm).collect() } else { vec![0.0; d] };
                (lambda, axis)
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top = pairs.first().map_or(0.0, |p| p.0).max(0.0);
    pairs.retain(|p| p.0 > RANK_TOL * top.max(f64::MIN_POSITIVE));
    pairs.truncate(dims.min(n - 1).min(d));
    if pairs.is_empty() {
        return Err(Error::DegenerateData("all PCA input vectors are identical".into()));
    }

    for (_, axis) in &mut pairs {
        let big = axis
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if big < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let projected = (0..n)
        .map(|i| {
            pairs
                .iter()
                .map(|(_, axis)| x.row(i).iter().zip(axis).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    Ok(Pca {
        mean,
        explained_variance: pairs.iter().map(|p| p.0).collect(),
        components: pairs.into_iter().map(|p| p.1).collect(),
        projected,
    })
}
