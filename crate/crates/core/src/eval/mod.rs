//! Intrinsic evaluation of a vector table: rank correlation against human
//! similarity judgements, PCA, and clustering with validity indices.

mod affinity;
mod hdbscan;
mod pca;
mod plot;
mod rank;
mod similarity;
mod validity;

pub use affinity::{
    affinity_propagation, median_off_diagonal, negative_squared_distances, AffinityConfig,
    Preference,
};
pub use hdbscan::{core_distances, hdbscan, mutual_reachability_mst, HdbscanConfig};
pub use pca::{components_to_fraction, pca, Pca};
pub use plot::scatter_svg;
pub use rank::{average_ranks, pearson, spearman};
pub use similarity::{
    cosine, eval_similarity, weighted_average, DatasetScore, SimilarityDataset, SimilarityReport,
};
pub use validity::{dispersions, silhouette, silhouette_samples, variance_ratio_criterion};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::Result;
use crate::vectors::VectorTable;

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Cluster assignment per point; `None` marks noise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<Option<usize>>,
    pub n_clusters: usize,
    pub converged: bool,
    /// Exemplar point per cluster (affinity propagation only).
    pub exemplars: Vec<usize>,
}

impl ClusteringResult {
    /// Relabels to dense ids `0..k` in order of first appearance.
    pub fn from_labels(labels: Vec<Option<usize>>, converged: bool) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<Option<usize>> = labels
            .into_iter()
            .map(|l| {
                l.map(|c| {
                    let next = map.len();
                    *map.entry(c).or_insert(next)
                })
            })
            .collect();
        Self {
            n_clusters: map.len(),
            labels,
            converged,
            exemplars: Vec::new(),
        }
    }

    pub fn all_noise(n: usize) -> Self {
        Self {
            labels: vec![None; n],
            n_clusters: 0,
            converged: true,
            exemplars: Vec::new(),
        }
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == Some(cluster))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub affinity: AffinityConfig,
    pub hdbscan: HdbscanConfig,
    pub pca_k: usize,
    pub variance_fraction: f64,
    /// Entities listed per principal component in the report.
    pub top_entities: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            affinity: AffinityConfig::default(),
            hdbscan: HdbscanConfig::default(),
            pca_k: 3,
            variance_fraction: 0.8,
            top_entities: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaSummary {
    pub k: usize,
    pub explained_variance_ratio: Vec<f64>,
    pub top_k_ratio: f64,
    pub variance_fraction: f64,
    pub components_to_fraction: usize,
    /// Highest-scoring entities on each of the top `k` components.
    pub top_entities: Vec<Vec<String>>,
}

fn serialize_index<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_infinite() => s.serialize_str(if *x > 0.0 { "+inf" } else { "-inf" }),
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringSummary {
    pub algorithm: String,
    pub n_clusters: usize,
    pub noise: usize,
    pub converged: bool,
    pub silhouette: Option<f64>,
    #[serde(serialize_with = "serialize_index")]
    pub vrc: Option<f64>,
    pub clusters: Vec<Vec<String>>,
    pub noise_points: Vec<String>,
    #[serde(skip)]
    pub result: ClusteringResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub entries: usize,
    pub dim: usize,
    pub similarity: SimilarityReport,
    pub pca: Option<PcaSummary>,
    pub clustering: Vec<ClusteringSummary>,
    /// 2-D PCA coordinates per entry, for plotting.
    #[serde(skip)]
    pub plane: Option<Vec<Vec<f64>>>,
}

fn summarize(
    algorithm: &str,
    tokens: &[String],
    points: &[Vec<f64>],
    result: ClusteringResult,
) -> ClusteringSummary {
    let silhouette = silhouette(points, &result.labels).ok();
    let vrc = variance_ratio_criterion(points, &result.labels).ok();
    ClusteringSummary {
        algorithm: algorithm.to_string(),
        n_clusters: result.n_clusters,
        noise: result.noise_count(),
        converged: result.converged,
        silhouette,
        vrc,
        clusters: (0..result.n_clusters)
            .map(|c| {
                result
                    .members(c)
                    .into_iter()
                    .map(|i| tokens[i].clone())
                    .collect()
            })
            .collect(),
        noise_points: (0..tokens.len())
            .filter(|&i| result.labels[i].is_none())
            .map(|i| tokens[i].clone())
            .collect(),
        result,
    }
}

/// Runs every analysis on `table`. PCA and clustering are skipped (with a
/// warning) when the table is too small for them.
pub fn run_evaluation(
    table: &VectorTable,
    datasets: &[SimilarityDataset],
    config: &EvalConfig,
) -> Result<EvalReport> {
    let similarity = eval_similarity(table, datasets);
    let points = table.to_points();
    let tokens = table.tokens();

    let mut pca_summary = None;
    let mut plane = None;
    if points.len() > config.pca_k && table.dim() >= config.pca_k {
        let p = pca(&points, config.pca_k)?;
        let top_entities = (0..config.pca_k)
            .map(|c| {
                let mut idx: Vec<usize> = (0..points.len()).collect();
                idx.sort_by(|&a, &b| p.projected[b][c].total_cmp(&p.projected[a][c]));
                idx.into_iter()
                    .take(config.top_entities)
                    .map(|i| tokens[i].clone())
                    .collect()
            })
            .collect();
        pca_summary = Some(PcaSummary {
            k: config.pca_k,
            top_k_ratio: p.explained_variance_ratio[..config.pca_k].iter().sum(),
            components_to_fraction: components_to_fraction(
                &p.explained_variance_ratio,
                config.variance_fraction,
            )?,
            variance_fraction: config.variance_fraction,
            explained_variance_ratio: p.explained_variance_ratio.clone(),
            top_entities,
        });
        if table.dim() >= 2 {
            plane = Some(
                p.projected
                    .iter()
                    .map(|z| z[..2.min(z.len())].to_vec())
                    .collect(),
            );
            if config.pca_k < 2 {
                plane = Some(pca(&points, 2)?.projected);
            }
        }
    } else {
        log::warn!(
            "PCA skipped: {} entries of dimension {} for k = {}",
            points.len(),
            table.dim(),
            config.pca_k
        );
    }

    let mut clustering = Vec::new();
    if !points.is_empty() {
        let ap = affinity_propagation(&negative_squared_distances(&points), &config.affinity)?;
        clustering.push(summarize("affinity_propagation", tokens, &points, ap));
        let hd = hdbscan(&points, &config.hdbscan)?;
        clustering.push(summarize("hdbscan", tokens, &points, hd));
    }

    Ok(EvalReport {
        entries: table.len(),
        dim: table.dim(),
        similarity,
        pca: pca_summary,
        clustering,
        plane,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Flat `section,name,metric,value` table.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<[String; 4]> = Vec::new();
        let mut row = |section: &str, name: &str, metric: &str, value: String| {
            rows.push([section.into(), name.into(), metric.into(), value]);
        };
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for d in &self.similarity.datasets {
            row(
                "similarity",
                &d.name,
                "total_pairs",
                d.total_pairs.to_string(),
            );
            row("similarity", &d.name, "coverage", d.coverage.to_string());
            row("similarity", &d.name, "rho", fmt(d.rho));
        }
        row(
            "similarity",
            "weighted_average",
            "rho",
            fmt(self.similarity.weighted_average),
        );
        if let Some(p) = &self.pca {
            for (i, r) in p.explained_variance_ratio.iter().enumerate() {
                row(
                    "pca",
                    &format!("component_{}", i + 1),
                    "explained_variance_ratio",
                    r.to_string(),
                );
            }
            row(
                "pca",
                &format!("top_{}", p.k),
                "explained_variance_ratio",
                p.top_k_ratio.to_string(),
            );
            row(
                "pca",
                "components_to_fraction",
                &p.variance_fraction.to_string(),
                p.components_to_fraction.to_string(),
            );
        }
        for c in &self.clustering {
            let a = c.algorithm.as_str();
            row("clustering", a, "n_clusters", c.n_clusters.to_string());
            row("clustering", a, "noise", c.noise.to_string());
            row("clustering", a, "converged", c.converged.to_string());
            row("clustering", a, "silhouette", fmt(c.silhouette));
            row("clustering", a, "vrc", fmt(c.vrc));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "name", "metric", "value"])
            .expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_relabeling() {
        let r = ClusteringResult::from_labels(vec![Some(7), None, Some(3), Some(7)], true);
        assert_eq!(r.labels, [Some(0), None, Some(1), Some(0)]);
        assert_eq!(r.n_clusters, 2);
        assert_eq!(r.noise_count(), 1);
    }

    #[test]
    fn report_on_two_blobs() {
        let mut rows = Vec::new();
        for i in 0..4 {
            rows.push((format!("a{i}"), vec![i as f64 * 0.1, 0.0, 0.05 * i as f64]));
            rows.push((
                format!("b{i}"),
                vec![5.0 + i as f64 * 0.1, 5.0, 0.02 * i as f64],
            ));
        }
        let table = VectorTable::from_rows(3, rows).unwrap();
        let ds =
            SimilarityDataset::parse("d", "a0\ta1\t9\na0\tb0\t1\nb1\tb2\t8\na2\tb3\t2\n").unwrap();
        let report = run_evaluation(&table, &[ds], &EvalConfig::default()).unwrap();
        assert_eq!(report.clustering.len(), 2);
        for c in &report.clustering {
            assert_eq!(c.n_clusters, 2, "{}", c.algorithm);
            assert!(c.silhouette.unwrap() > 0.9);
        }
        assert!(report.similarity.weighted_average.unwrap() > 0.0);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["clustering"][0]["algorithm"], "affinity_propagation");
        let csv = report.to_csv();
        assert!(csv.contains("clustering,hdbscan,n_clusters,2"), "{csv}");
        assert_eq!(report.plane.as_ref().unwrap().len(), 8);
    }

    #[test]
    fn infinite_vrc_serializes_as_sentinel() {
        let table = VectorTable::from_rows(
            2,
            [
                ("a", vec![0.0, 0.0]),
                ("b", vec![0.0, 0.0]),
                ("c", vec![9.0, 9.0]),
                ("d", vec![9.0, 9.0]),
            ],
        )
        .unwrap();
        let report = run_evaluation(
            &table,
            &[],
            &EvalConfig {
                pca_k: 1,
                ..EvalConfig::default()
            },
        )
        .unwrap();
        let json = report.to_json();
        assert!(json.contains("\"+inf\""), "{json}");
    }

    #[test]
    fn csv_quotes_awkward_names() {
        let table = VectorTable::from_rows(
            2,
            [
                ("a", vec![1.0, 0.0]),
                ("b", vec![0.0, 1.0]),
                ("c", vec![1.0, 1.0]),
            ],
        )
        .unwrap();
        let ds = SimilarityDataset::parse("x,y", "a\tb\t1\na\tc\t2\nb\tc\t3\n").unwrap();
        let csv = run_evaluation(
            &table,
            &[ds],
            &EvalConfig {
                pca_k: 1,
                ..EvalConfig::default()
            },
        )
        .unwrap()
        .to_csv();
        assert!(csv.contains("similarity,\"x,y\",coverage,3"), "{csv}");
    }
}
