//! Density-based clustering of 2D points.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClusterLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DbscanConfig {
    pub epsilon: f64,
    /// Neighbourhood size (the point itself included) that makes a core point.
    pub min_pts: usize,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        Self {
            epsilon: 4.0,
            min_pts: 15,
        }
    }
}

fn neighbours(points: &[[f64; 2]], i: usize, eps2: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&j| (points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2) <= eps2)
        .collect()
}

/// DBSCAN with Euclidean distance. Clusters are numbered from 0 in the order
/// their first core point appears; a border point joins the first cluster
/// that reaches it. `None` marks noise.
pub fn dbscan_cluster(points: &[[f64; 2]], cfg: &DbscanConfig) -> Result<Vec<ClusterLabel>> {
    if !(cfg.epsilon > 0.0) || cfg.min_pts == 0 {
        return Err(Error::InvalidConfig(format!("bad DBSCAN config {cfg:?}")));
    }
    let eps2 = cfg.epsilon * cfg.epsilon;
    let mut labels: Vec<ClusterLabel> = vec![None; points.len()];
    let mut visited = vec![false; points.len()];
    let mut next = 0u32;
    for i in 0..points.len() {
        if visited[i] {
            continue;
        }
        let nb = neighbours(points, i, eps2);
        if nb.len() < cfg.min_pts {
            continue;
        }
        visited[i] = true;
        labels[i] = Some(next);
        let mut queue: VecDeque<usize> = nb.into();
        while let Some(j) = queue.pop_front() {
            if labels[j].is_none() {
                labels[j] = Some(next);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nj = neighbours(points, j, eps2);
            if nj.len() >= cfg.min_pts {
                queue.extend(nj.into_iter().filter(|&k| !visited[k]));
            }
        }
        next += 1;
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_points_are_noise() {
        let pts: Vec<[f64; 2]> = (0..5).map(|i| [i as f64 * 10.0, 0.0]).collect();
        let cfg = DbscanConfig { epsilon: 1.0, min_pts: 2 };
        assert!(dbscan_cluster(&pts, &cfg).unwrap().iter().all(Option::is_none));
        assert_eq!(dbscan_cluster(&[[0.0, 0.0]], &cfg).unwrap(), vec![None]);
    }

    #[test]
    fn two_blobs() {
        let mut pts = Vec::new();
        for b in 0..2 {
            for k in 0..20 {
                let a = k as f64 * 0.3;
                pts.push([b as f64 * 20.0 + a.cos(), a.sin()]);
            }
        }
        let labels = dbscan_cluster(&pts, &DbscanConfig { epsilon: 4.0, min_pts: 15 }).unwrap();
        assert!(labels[..20].iter().all(|l| *l == Some(0)));
        assert!(labels[20..].iter().all(|l| *l == Some(1)));
    }

    #[test]
    fn min_pts_one_clusters_everything() {
        let pts = [[0.0, 0.0], [50.0, 0.0]];
        let labels = dbscan_cluster(&pts, &DbscanConfig { epsilon: 1.0, min_pts: 1 }).unwrap();
        assert_eq!(labels, vec![Some(0), Some(1)]);
    }
}
