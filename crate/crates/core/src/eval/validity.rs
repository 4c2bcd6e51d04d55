//! Internal cluster validity indices. Noise points are left out of both.

use std::collections::BTreeMap;

use super::euclidean;
use crate::error::{Error, Result};

fn groups(labels: &[Option<usize>]) -> BTreeMap<usize, Vec<usize>> {
    let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            g.entry(*c).or_default().push(i);
        }
    }
    g
}

fn check_lengths(points: &[Vec<f64>], labels: &[Option<usize>]) -> Result<()> {
    if points.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: labels.len(),
        });
    }
    Ok(())
}

/// Per-point silhouette values for non-noise points, in point order.
/// Members of singleton clusters score zero.
pub fn silhouette_samples(
    points: &[Vec<f64>],
    labels: &[Option<usize>],
) -> Result<Vec<(usize, f64)>> {
    check_lengths(points, labels)?;
    let groups = groups(labels);
    if groups.len() < 2 {
        return Err(Error::SilhouetteUndefined(groups.len()));
    }
    let mut out = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let Some(own) = label else { continue };
        let members = &groups[own];
        if members.len() == 1 {
            out.push((i, 0.0));
            continue;
        }
        let mean_to = |idx: &[usize]| {
            idx.iter()
                .filter(|&&j| j != i)
                .map(|&j| euclidean(&points[i], &points[j]))
                .sum::<f64>()
        };
        let a = mean_to(members) / (members.len() - 1) as f64;
        let b = groups
            .iter()
            .filter(|(c, _)| *c != own)
            .map(|(_, idx)| mean_to(idx) / idx.len() as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        out.push((i, if denom == 0.0 { 0.0 } else { (b - a) / denom }));
    }
    Ok(out)
}

/// Mean silhouette coefficient over non-noise points.
pub fn silhouette(points: &[Vec<f64>], labels: &[Option<usize>]) -> Result<f64> {
    let s = silhouette_samples(points, labels)?;
    Ok(s.iter().map(|(_, v)| v).sum::<f64>() / s.len() as f64)
}

/// Between- and within-cluster dispersion (summed squared distances to the
/// global and cluster centroids) over non-noise points.
pub fn dispersions(points: &[Vec<f64>], labels: &[Option<usize>]) -> Result<(f64, f64)> {
    check_lengths(points, labels)?;
    let groups = groups(labels);
    let members: Vec<usize> = groups.values().flatten().copied().collect();
    if members.is_empty() {
        return Err(Error::Empty("labelled points"));
    }
    let dim = points[members[0]].len();
    let centroid = |idx: &[usize]| {
        let mut c = vec![0.0; dim];
        for &i in idx {
            for (a, x) in c.iter_mut().zip(&points[i]) {
                *a += x / idx.len() as f64;
            }
        }
        c
    };
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let global = centroid(&members);
    let (mut between, mut within) = (0.0, 0.0);
    for idx in groups.values() {
        let c = centroid(idx);
        between += idx.len() as f64 * sq(&c, &global);
        within += idx.iter().map(|&i| sq(&points[i], &c)).sum::<f64>();
    }
    Ok((between, within))
}

/// Variance ratio criterion `(B / (k - 1)) / (W / (n - k))`; `+∞` when the
/// within-cluster dispersion is zero.
pub fn variance_ratio_criterion(points: &[Vec<f64>], labels: &[Option<usize>]) -> Result<f64> {
    let groups = groups(labels);
    let k = groups.len();
    let n: usize = groups.values().map(Vec::len).sum();
    if k < 2 {
        return Err(Error::invalid(
            "labels",
            format!("need at least 2 clusters, found {k}"),
        ));
    }
    if n <= k {
        return Err(Error::invalid(
            "labels",
            format!("need more points ({n}) than clusters ({k})"),
        ));
    }
    let (between, within) = dispersions(points, labels)?;
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Vec<Vec<f64>> {
        vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]]
    }

    #[test]
    fn separated_line_clusters() {
        let labels = [Some(0), Some(0), Some(1), Some(1)];
        let s = silhouette(&line(), &labels).unwrap();
        // a = 0.1 everywhere; b = 10.05 for the outer points, 9.95 for the inner
        let expected = ((10.05 - 0.1) / 10.05 + (9.95 - 0.1) / 9.95) / 2.0;
        assert!((s - expected).abs() < 1e-12);
        assert!(s >= 0.97);
    }

    #[test]
    fn swapped_labels_are_negative() {
        let labels = [Some(0), Some(1), Some(0), Some(1)];
        assert!(silhouette(&line(), &labels).unwrap() < 0.0);
    }

    #[test]
    fn singletons_score_zero() {
        let labels: Vec<Option<usize>> = (0..4).map(Some).collect();
        let s = silhouette_samples(&line(), &labels).unwrap();
        assert!(s.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn silhouette_needs_two_clusters() {
        let labels = [Some(0), Some(0), None, Some(0)];
        assert!(matches!(
            silhouette(&line(), &labels),
            Err(Error::SilhouetteUndefined(1))
        ));
    }

    #[test]
    fn noise_is_excluded() {
        let mut pts = line();
        pts.push(vec![500.0]);
        let with_noise = [Some(0), Some(0), Some(1), Some(1), None];
        let without = [Some(0), Some(0), Some(1), Some(1)];
        assert_eq!(
            silhouette(&pts, &with_noise).unwrap(),
            silhouette(&line(), &without).unwrap()
        );
        assert_eq!(
            variance_ratio_criterion(&pts, &with_noise).unwrap(),
            variance_ratio_criterion(&line(), &without).unwrap()
        );
    }

    #[test]
    fn four_point_vrc() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 10.0],
            vec![10.0, 11.0],
        ];
        let labels = [Some(0), Some(0), Some(1), Some(1)];
        let (b, w) = dispersions(&pts, &labels).unwrap();
        assert!((b - 200.0).abs() < 1e-9 && (w - 1.0).abs() < 1e-12);
        assert!((variance_ratio_criterion(&pts, &labels).unwrap() - 400.0).abs() < 1e-9);
    }

    #[test]
    fn zero_within_is_infinite() {
        let pts = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
        let labels = [Some(0), Some(0), Some(1), Some(1)];
        assert_eq!(
            variance_ratio_criterion(&pts, &labels).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn random_labels_on_isotropic_data_give_vrc_near_one() {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut total = 0.0;
        for seed in 0..20 {
            let mut rng = crate::rng::seeded(seed);
            let pts: Vec<Vec<f64>> = (0..200)
                .map(|_| (0..2).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            let labels: Vec<Option<usize>> = (0..200).map(|i| Some(i % 2)).collect();
            total += variance_ratio_criterion(&pts, &labels).unwrap();
        }
        let mean = total / 20.0;
        assert!((mean - 1.0).abs() <= 0.5, "{mean}");
    }
}
