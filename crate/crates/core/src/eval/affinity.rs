//! Affinity propagation: responsibility / availability message passing over
//! a similarity matrix, with damping.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ClusteringResult;
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preference {
    /// Median of the off-diagonal similarities.
    Median,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffinityConfig {
    pub damping: f64,
    pub preference: Preference,
    pub max_iter: usize,
    /// Iterations the exemplar set must stay unchanged to count as converged.
    pub convergence_window: usize,
    /// Seed for the tiny noise added to the similarities to break exact ties.
    pub seed: u64,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        Self {
            damping: 0.75,
            preference: Preference::Median,
            max_iter: 500,
            convergence_window: 15,
            seed: 0,
        }
    }
}

/// `-‖a - b‖²` for every pair of points.
pub fn negative_squared_distances(points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        -points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    })
}

pub fn median_off_diagonal(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    let mut vals: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| s[(i, j)])
        .collect();
    if vals.is_empty() {
        return 0.0;
    }
    vals.sort_by(f64::total_cmp);
    let m = vals.len() / 2;
    if vals.len() % 2 == 1 {
        vals[m]
    } else {
        (vals[m - 1] + vals[m]) / 2.0
    }
}

/// Clusters by affinity propagation. Non-convergence within `max_iter` is
/// reported through [`ClusteringResult::converged`], not as an error. If the
/// messages elect no exemplar at all, the point with the largest
/// self-evidence becomes the single exemplar.
pub fn affinity_propagation(
    similarities: &DMatrix<f64>,
    config: &AffinityConfig,
) -> Result<ClusteringResult> {
    if !(0.5..1.0).contains(&config.damping) {
        return Err(Error::invalid("damping", "must be in [0.5, 1)"));
    }
    let n = similarities.nrows();
    if n != similarities.ncols() {
        return Err(Error::invalid("similarities", "matrix must be square"));
    }
    if n == 0 {
        return Err(Error::Empty("similarity matrix"));
    }
    if config.convergence_window == 0 {
        return Err(Error::invalid("convergence_window", "must be at least 1"));
    }
    let preference = match config.preference {
        Preference::Median => median_off_diagonal(similarities),
        Preference::Value(v) => v,
    };
    let mut s = similarities.clone();
    for k in 0..n {
        s[(k, k)] = preference;
    }
    if n == 1 {
        return Ok(assign(&s, vec![0], true));
    }
    let first = s[(0, 0)];
    if s.iter().all(|&v| v == first) {
        // no similarity structure: every point is interchangeable
        return Ok(assign(&s, vec![0], true));
    }

    // Symmetric inputs (e.g. regular polygons) otherwise oscillate forever.
    // The perturbation is a few ulps, far below any meaningful similarity gap.
    let mut rng = seeded(config.seed);
    let mut s_noisy = s.clone();
    for v in s_noisy.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += (f64::EPSILON * *v + f64::MIN_POSITIVE * 100.0) * z;
    }
    let s_clean = s;
    let s = s_noisy;

    let lambda = config.damping;
    let mut r = DMatrix::<f64>::zeros(n, n);
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut history: Vec<Vec<bool>> = Vec::with_capacity(config.max_iter);
    let mut converged = false;

    for it in 0..config.max_iter {
        // responsibilities
        for i in 0..n {
            let (mut best, mut second, mut best_k) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
            for k in 0..n {
                let v = a[(i, k)] + s[(i, k)];
                if v > best {
                    second = best;
                    best = v;
                    best_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competitor = if k == best_k { second } else { best };
                let fresh = s[(i, k)] - competitor;
                r[(i, k)] = lambda * r[(i, k)] + (1.0 - lambda) * fresh;
            }
        }
        // availabilities
        for k in 0..n {
            let positive_sum: f64 = (0..n).filter(|&i| i != k).map(|i| r[(i, k)].max(0.0)).sum();
            for i in 0..n {
                let fresh = if i == k {
                    positive_sum
                } else {
                    (r[(k, k)] + positive_sum - r[(i, k)].max(0.0)).min(0.0)
                };
                a[(i, k)] = lambda * a[(i, k)] + (1.0 - lambda) * fresh;
            }
        }

        let exemplars: Vec<bool> = (0..n).map(|k| a[(k, k)] + r[(k, k)] > 0.0).collect();
        history.push(exemplars);
        let w = config.convergence_window;
        if it >= w {
            let recent = &history[history.len() - w..];
            let stable = recent.iter().all(|e| e == &recent[0]);
            if stable && recent[0].iter().any(|&e| e) {
                converged = true;
                break;
            }
        }
    }

    let last = history.last().expect("max_iter >= 1 checked by loop");
    let mut exemplars: Vec<usize> = (0..n).filter(|&k| last[k]).collect();
    if exemplars.is_empty() {
        let k = (0..n)
            .max_by(|&x, &y| (a[(x, x)] + r[(x, x)]).total_cmp(&(a[(y, y)] + r[(y, y)])))
            .unwrap();
        exemplars.push(k);
        converged = false;
    }
    Ok(assign(&s_clean, exemplars, converged))
}

/// Labels every point with its most similar exemplar, re-elects each
/// cluster's exemplar as the member with the highest summed within-cluster
/// similarity, and labels once more.
fn assign(s: &DMatrix<f64>, exemplars: Vec<usize>, converged: bool) -> ClusteringResult {
    let n = s.nrows();
    let label_with = |ex: &[usize]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                if let Some(pos) = ex.iter().position(|&e| e == i) {
                    return pos;
                }
                let mut best = 0;
                for (c, &e) in ex.iter().enumerate() {
                    if s[(i, e)] > s[(i, ex[best])] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    };
    let labels = label_with(&exemplars);
    let mut refined: Vec<usize> = (0..exemplars.len())
        .map(|c| {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            *members
                .iter()
                .max_by(|&&x, &&y| {
                    let sx: f64 = members.iter().map(|&j| s[(j, x)]).sum();
                    let sy: f64 = members.iter().map(|&j| s[(j, y)]).sum();
                    // prefer the earlier index on ties
                    sx.total_cmp(&sy).then(y.cmp(&x))
                })
                .unwrap()
        })
        .collect();
    refined.sort_unstable();
    refined.dedup();
    let labels = label_with(&refined);
    ClusteringResult {
        labels: labels.into_iter().map(Some).collect(),
        n_clusters: refined.len(),
        converged,
        exemplars: refined,
    }
}
