//! HDBSCAN over Euclidean distance.
//!
//! 1. core distance: distance to the `(m_pts - 1)`-th nearest other point;
//! 2. mutual reachability `max(core(a), core(b), d(a, b))`;
//! 3. minimum spanning tree of the mutual reachability graph (Prim);
//! 4. single-linkage hierarchy from the sorted tree edges;
//! 5. condensed tree with minimum cluster size `m_pts`;
//! 6. excess-of-mass selection of flat clusters.
//!
//! Selection never picks the root, and never picks a cluster whose
//! stability is zero (it is born and dissolves at the same density). Ties
//! between a cluster and the summed stability of its children go to the
//! parent. Points outside every selected cluster are noise.

use serde::{Deserialize, Serialize};

use super::{euclidean, ClusteringResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdbscanConfig {
    /// Minimum cluster size; also sets the core-distance neighbour rank.
    pub m_pts: usize,
}

impl Default for HdbscanConfig {
    fn default() -> Self {
        Self { m_pts: 2 }
    }
}

/// Distances below this are treated as this value when converting to
/// density `λ = 1 / d`, so duplicate points yield finite stabilities.
const MIN_DISTANCE: f64 = 1e-12;

fn lambda(d: f64) -> f64 {
    1.0 / d.max(MIN_DISTANCE)
}

pub fn core_distances(points: &[Vec<f64>], m_pts: usize) -> Vec<f64> {
    let n = points.len();
    let rank = m_pts.saturating_sub(1);
    (0..n)
        .map(|i| {
            if rank == 0 {
                return 0.0;
            }
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| euclidean(&points[i], &points[j]))
                .collect();
            d.sort_by(f64::total_cmp);
            d.get(rank - 1).copied().unwrap_or(f64::INFINITY)
        })
        .collect()
}

/// Minimum spanning tree edges `(a, b, weight)` under mutual reachability.
pub fn mutual_reachability_mst(points: &[Vec<f64>], core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let reach = |a: usize, b: usize| core[a].max(core[b]).max(euclidean(&points[a], &points[b]));
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if !in_tree[j] {
                let w = reach(current, j);
                if w < best[j] {
                    best[j] = w;
                    parent[j] = current;
                }
            }
        }
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&x, &y| best[x].total_cmp(&best[y]).then(x.cmp(&y)))
            .unwrap();
        in_tree[next] = true;
        edges.push((parent[next], next, best[next]));
        current = next;
    }
    edges
}

/// A merge in the single-linkage hierarchy. Nodes `0..n` are points; merge
/// `m` creates node `n + m`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Merge {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

fn single_linkage(n: usize, mut mst: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    mst.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut uf = UnionFind::new(2 * n - 1);
    let mut size = vec![1usize; 2 * n - 1];
    let mut merges = Vec::with_capacity(n - 1);
    for (a, b, w) in mst {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let node = n + merges.len();
        uf.parent[ra] = node;
        uf.parent[rb] = node;
        size[node] = size[ra] + size[rb];
        merges.push(Merge {
            left: ra,
            right: rb,
            distance: w,
            size: size[node],
        });
    }
    merges
}

#[derive(Debug, Clone)]
struct CondensedCluster {
    birth: f64,
    children: Vec<usize>,
    /// Points that left this cluster, with the density at which they left.
    fallen: Vec<(usize, f64)>,
}

impl CondensedCluster {
    fn stability(&self, all: &[CondensedCluster]) -> f64 {
        let own: f64 = self.fallen.iter().map(|(_, l)| l - self.birth).sum();
        // points that moved into child clusters left this one at the child's birth
        let to_children: f64 = self
            .children
            .iter()
            .map(|&c| (all[c].birth - self.birth) * subtree_size(all, c) as f64)
            .sum();
        own + to_children
    }
}

fn subtree_size(all: &[CondensedCluster], c: usize) -> usize {
    all[c].fallen.len()
        + all[c]
            .children
            .iter()
            .map(|&k| subtree_size(all, k))
            .sum::<usize>()
}

fn leaves_of(merges: &[Merge], n: usize, node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let m = merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
}

fn node_size(merges: &[Merge], n: usize, node: usize) -> usize {
    if node < n {
        1
    } else {
        merges[node - n].size
    }
}

fn condense(merges: &[Merge], n: usize, min_size: usize) -> Vec<CondensedCluster> {
    let root = n + merges.len() - 1;
    let mut clusters = vec![CondensedCluster {
        birth: 0.0,
        children: Vec::new(),
        fallen: Vec::new(),
    }];
    // (hierarchy node, owning condensed cluster)
    let mut stack = vec![(root, 0usize)];
    while let Some((node, owner)) = stack.pop() {
        if node < n {
            // only reachable with min_size 1, which the caller rejects
            continue;
        }
        let m = merges[node - n];
        let l = lambda(m.distance);
        let (ls, rs) = (node_size(merges, n, m.left), node_size(merges, n, m.right));
        let fall_out = |child: usize, clusters: &mut Vec<CondensedCluster>| {
            let mut pts = Vec::new();
            leaves_of(merges, n, child, &mut pts);
            clusters[owner]
                .fallen
                .extend(pts.into_iter().map(|p| (p, l)));
        };
        match (ls >= min_size, rs >= min_size) {
            (true, true) => {
                for child in [m.left, m.right] {
                    let id = clusters.len();
                    clusters.push(CondensedCluster {
                        birth: l,
                        children: Vec::new(),
                        fallen: Vec::new(),
                    });
                    clusters[owner].children.push(id);
                    stack.push((child, id));
                }
            }
            (true, false) => {
                fall_out(m.right, &mut clusters);
                stack.push((m.left, owner));
            }
            (false, true) => {
                fall_out(m.left, &mut clusters);
                stack.push((m.right, owner));
            }
            (false, false) => {
                fall_out(m.left, &mut clusters);
                fall_out(m.right, &mut clusters);
            }
        }
    }
    clusters
}

fn collect_points(all: &[CondensedCluster], c: usize, out: &mut Vec<usize>) {
    out.extend(all[c].fallen.iter().map(|(p, _)| *p));
    for &k in &all[c].children {
        collect_points(all, k, out);
    }
}

pub fn hdbscan(points: &[Vec<f64>], config: &HdbscanConfig) -> Result<ClusteringResult> {
    let n = points.len();
    if config.m_pts < 2 {
        return Err(Error::invalid("m_pts", "must be at least 2"));
    }
    if let Some(p) = points.iter().find(|p| p.len() != points[0].len()) {
        return Err(Error::DimensionMismatch {
            expected: points[0].len(),
            found: p.len(),
        });
    }
    if n < config.m_pts {
        log::warn!(
            "{n} points is fewer than m_pts = {}; all noise",
            config.m_pts
        );
        return Ok(ClusteringResult::all_noise(n));
    }

    let core = core_distances(points, config.m_pts);
    let mst = mutual_reachability_mst(points, &core);
    let merges = single_linkage(n, mst);
    let clusters = condense(&merges, n, config.m_pts);

    // excess of mass, children before parents (ids grow with depth)
    let mut stability: Vec<f64> = clusters.iter().map(|c| c.stability(&clusters)).collect();
    let mut selected = vec![false; clusters.len()];
    for c in (1..clusters.len()).rev() {
        let child_sum: f64 = clusters[c].children.iter().map(|&k| stability[k]).sum();
        if clusters[c].children.is_empty() || stability[c] >= child_sum {
            selected[c] = stability[c] > 0.0;
            if selected[c] {
                deselect_descendants(&clusters, c, &mut selected);
            }
        } else {
            stability[c] = child_sum;
        }
    }

    let mut labels = vec![None; n];
    for (next, c) in (1..clusters.len()).filter(|&c| selected[c]).enumerate() {
        let mut pts = Vec::new();
        collect_points(&clusters, c, &mut pts);
        for p in pts {
            labels[p] = Some(next);
        }
    }
    Ok(ClusteringResult::from_labels(labels, true))
}

fn deselect_descendants(all: &[CondensedCluster], c: usize, selected: &mut [bool]) {
    for &k in &all[c].children {
        selected[k] = false;
        deselect_descendants(all, k, selected);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(points: &[Vec<f64>]) -> ClusteringResult {
        hdbscan(points, &HdbscanConfig::default()).unwrap()
    }

    #[test]
    fn core_distance_is_nearest_neighbour_for_two() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        assert_eq!(core_distances(&pts, 2), [1.0, 1.0, 2.0]);
        assert_eq!(core_distances(&pts, 3), [3.0, 2.0, 3.0]);
    }

    #[test]
    fn mst_has_n_minus_one_edges_and_minimal_weight() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![4.0, 0.0],
            vec![4.0, 2.0],
        ];
        let core = core_distances(&pts, 2);
        let mst = mutual_reachability_mst(&pts, &core);
        assert_eq!(mst.len(), 3);
        let total: f64 = mst.iter().map(|e| e.2).sum();
        // 1 (0-1) + 2 (2-3) + 4 (0-2)
        assert!((total - 7.0).abs() < 1e-12);
    }

    #[test]
    fn two_tight_pairs() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 0.0],
            vec![10.1, 0.0],
        ];
        let r = run(&pts);
        assert_eq!(r.n_clusters, 2);
        assert_eq!(r.noise_count(), 0);
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
    }

    #[test]
    fn remote_singleton_is_noise() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 0.0],
            vec![10.1, 0.0],
            vec![100.0, 100.0],
        ];
        let r = run(&pts);
        assert_eq!(r.n_clusters, 2);
        assert_eq!(r.noise_count(), 1);
        assert_eq!(r.labels[4], None);
    }

    #[test]
    fn regular_simplex_is_all_noise() {
        // every split happens at one density, so no cluster has positive stability
        for n in 3..=6 {
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            let r = run(&pts);
            assert_eq!(r.n_clusters, 0, "n = {n}");
            assert_eq!(r.noise_count(), n);
        }
    }

    #[test]
    fn clusters_meet_minimum_size() {
        let mut pts = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (5.0, 5.0), (0.0, 9.0)] {
            for k in 0..4 {
                pts.push(vec![cx + 0.1 * k as f64, cy + 0.05 * (k * k) as f64]);
            }
        }
        pts.push(vec![20.0, -20.0]);
        for m_pts in 2..=4 {
            let r = hdbscan(&pts, &HdbscanConfig { m_pts }).unwrap();
            for c in 0..r.n_clusters {
                assert!(r.labels.iter().filter(|&&l| l == Some(c)).count() >= m_pts);
            }
        }
    }

    #[test]
    fn too_few_points_are_noise() {
        let r = hdbscan(&[vec![1.0]], &HdbscanConfig::default()).unwrap();
        assert_eq!(r.labels, [None]);
        assert!(hdbscan(&[vec![1.0]], &HdbscanConfig { m_pts: 1 }).is_err());
    }

    #[test]
    fn duplicates_do_not_overflow() {
        let pts = vec![vec![0.0], vec![0.0], vec![5.0], vec![5.0]];
        let r = run(&pts);
        assert_eq!(r.n_clusters, 2);
    }
}
