//! Principal component analysis via the eigendecomposition of the sample
//! covariance matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Top `k` unit-length principal axes, strongest first. Each axis is
    /// signed so that its largest-magnitude loading is positive.
    pub components: Vec<Vec<f64>>,
    /// Variance along every axis, descending (length = data dimension).
    pub explained_variance: Vec<f64>,
    /// `explained_variance / total variance`; sums to one.
    pub explained_variance_ratio: Vec<f64>,
    /// Coordinates of every input point on the top `k` axes.
    pub projected: Vec<Vec<f64>>,
}

impl Pca {
    pub fn project(&self, point: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(point.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect()
    }

    /// Maps projected coordinates back into the input space.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &z) in self.components.iter().zip(coords) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += z * w;
            }
        }
        out
    }
}

pub fn pca(points: &[Vec<f64>], k: usize) -> Result<Pca> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let n = points.len();
    if n < k + 1 {
        return Err(Error::invalid(
            "points",
            format!("need at least {} points, got {n}", k + 1),
        ));
    }
    let dim = points[0].len();
    if k > dim {
        return Err(Error::invalid(
            "k",
            format!("{k} exceeds data dimension {dim}"),
        ));
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.len(),
        });
    }

    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / n as f64;
        }
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| points[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let explained_variance: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = explained_variance.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("points", "data has zero variance"));
    }
    let explained_variance_ratio = explained_variance.iter().map(|v| v / total).collect();

    let components: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&i| {
            let mut axis: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let pivot = axis
                .iter()
                .copied()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(0.0);
            if pivot < 0.0 {
                axis.iter_mut().for_each(|x| *x = -*x);
            }
            axis
        })
        .collect();

    let mut result = Pca {
        mean,
        components,
        explained_variance,
        explained_variance_ratio,
        projected: Vec::new(),
    };
    result.projected = points.iter().map(|p| result.project(p)).collect();
    Ok(result)
}

/// Smallest number of leading components whose ratios reach `fraction`.
pub fn components_to_fraction(ratios: &[f64], fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("fraction", "must lie in (0, 1]"));
    }
    if ratios.is_empty() {
        return Err(Error::Empty("explained variance ratios"));
    }
    const SLACK: f64 = 1e-12;
    let mut acc = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        acc += r;
        if acc >= fraction - SLACK {
            return Ok(i + 1);
        }
    }
    Ok(ratios.len())
}
