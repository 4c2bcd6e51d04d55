//! Browser bindings. Each export takes and returns JSON strings; the
//! `*_json` functions behind them are plain Rust and tested natively.

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use std::collections::BTreeMap;

use perceptrace::corpus::{
    build_salience_graph, generate_document, parse_scene_graphs, GenerateOptions, HeadlineMode,
};
use perceptrace::eval::{
    affinity_propagation, hdbscan, negative_squared_distances, pca, silhouette,
    variance_ratio_criterion, AffinityConfig, ClusteringResult, HdbscanConfig, Preference,
};
use perceptrace::rng::{seeded, truncated_normal_vec, TRUNCATION};
use perceptrace::skipgram::{combine_modalities, combine_target_context, train, TrainingConfig};
use perceptrace::trace::{extract_trace, PerceptionTrace};
use perceptrace::vectors::VectorTable;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Scene-graph record in, generated document and perception trace out.
pub fn trace_document_json(record: &str, template_headline: bool) -> Result<String, String> {
    let value: Value = serde_json::from_str(record).map_err(err)?;
    let docs = parse_scene_graphs(&value.to_string()).map_err(err)?;
    let doc = docs.first().ok_or("empty input")?;
    let opts = GenerateOptions {
        headline: if template_headline {
            HeadlineMode::Template
        } else {
            HeadlineMode::PreferRegion
        },
        ..GenerateOptions::default()
    };
    let generated = generate_document(doc, &opts).map_err(err)?;
    let graph = build_salience_graph(doc).map_err(err)?;
    let degrees: BTreeMap<&str, usize> = graph.nodes().map(|n| (n, graph.degree(n))).collect();
    let trace = extract_trace(&generated).map_err(err)?;
    Ok(json!({
        "document": generated,
        "degrees": degrees,
        "trace": trace.token_strings(),
    })
    .to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct TwoBlockParams {
    pub entities_per_block: usize,
    pub traces: usize,
    pub entities_per_trace: usize,
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TwoBlockParams {
    fn default() -> Self {
        Self {
            entities_per_block: 6,
            traces: 200,
            entities_per_trace: 5,
            dim: 8,
            window: 5,
            epochs: 10,
            learning_rate: 0.001,
            seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
struct Clustering {
    labels: Vec<Option<usize>>,
    n_clusters: usize,
    silhouette: Option<f64>,
    vrc: Option<f64>,
}

fn describe(points: &[Vec<f64>], r: ClusteringResult) -> Clustering {
    Clustering {
        silhouette: silhouette(points, &r.labels).ok(),
        vrc: variance_ratio_criterion(points, &r.labels)
            .ok()
            .filter(|v| v.is_finite()),
        n_clusters: r.n_clusters,
        labels: r.labels,
    }
}

/// Trains skip-gram on a synthetic corpus whose traces each draw from one of
/// two entity blocks, and returns a 2-D PCA view of the joint vectors.
pub fn train_two_block_json(params: &str) -> Result<String, String> {
    let p: TwoBlockParams = if params.trim().is_empty() {
        TwoBlockParams::default()
    } else {
        serde_json::from_str(params).map_err(err)?
    };
    if p.entities_per_block < 2
        || p.entities_per_trace == 0
        || p.entities_per_trace > p.entities_per_block
    {
        return Err(
            "need 2 or more entities per block and 1..=entities_per_block per trace".into(),
        );
    }
    let mut rng = seeded(p.seed);
    let blocks: Vec<Vec<String>> = ["a", "b"]
        .iter()
        .map(|b| {
            (0..p.entities_per_block)
                .map(|i| format!("{b}{i}"))
                .collect()
        })
        .collect();
    let mut traces = Vec::with_capacity(p.traces);
    for t in 0..p.traces {
        let chosen: Vec<&String> = blocks[t % 2]
            .choose_multiple(&mut rng, p.entities_per_trace)
            .collect();
        let tokens = chosen
            .iter()
            .flat_map(|e| [format!("{e}#t"), format!("{e}#i")])
            .map(|s| s.parse().map_err(err))
            .collect::<Result<_, _>>()?;
        traces.push(PerceptionTrace {
            doc_id: format!("t{t}"),
            tokens,
        });
    }
    let mut reduced = VectorTable::new(p.dim);
    for e in blocks.iter().flatten() {
        for m in ["t", "i"] {
            reduced
                .insert(
                    format!("{e}#{m}"),
                    &truncated_normal_vec(&mut rng, p.dim, TRUNCATION),
                )
                .map_err(err)?;
        }
    }
    let cfg = TrainingConfig {
        window: p.window,
        epochs: p.epochs,
        learning_rate: p.learning_rate,
        seed: p.seed,
        ..TrainingConfig::default()
    };
    let outcome = train(&traces, &reduced, &cfg).map_err(err)?;
    let joint = combine_modalities(&combine_target_context(&outcome.model));
    let points = joint.to_points();
    let projection = pca(&points, 2).map_err(err)?;
    let ap = affinity_propagation(
        &negative_squared_distances(&points),
        &AffinityConfig::default(),
    )
    .map_err(err)?;
    let hd = hdbscan(&points, &HdbscanConfig::default()).map_err(err)?;
    Ok(json!({
        "tokens": joint.tokens(),
        "coords": projection.projected,
        "explained_variance_ratio": projection.explained_variance_ratio,
        "epoch_losses": outcome.epoch_losses,
        "affinity_propagation": describe(&points, ap),
        "hdbscan": describe(&points, hd),
    })
    .to_string())
}

#[derive(Debug, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum ClusterRequest {
    AffinityPropagation {
        points: Vec<Vec<f64>>,
        #[serde(default = "default_damping")]
        damping: f64,
        preference: Option<f64>,
    },
    Hdbscan {
        points: Vec<Vec<f64>>,
        #[serde(default = "default_m_pts")]
        m_pts: usize,
    },
}

fn default_damping() -> f64 {
    0.75
}

fn default_m_pts() -> usize {
    2
}

/// Clusters user-placed points with either algorithm.
pub fn cluster_points_json(request: &str) -> Result<String, String> {
    let req: ClusterRequest = serde_json::from_str(request).map_err(err)?;
    let (points, result) = match req {
        ClusterRequest::AffinityPropagation {
            points,
            damping,
            preference,
        } => {
            if points.is_empty() {
                return Err("no points".into());
            }
            let cfg = AffinityConfig {
                damping,
                preference: preference.map_or(Preference::Median, Preference::Value),
                ..AffinityConfig::default()
            };
            let r =
                affinity_propagation(&negative_squared_distances(&points), &cfg).map_err(err)?;
            (points, r)
        }
        ClusterRequest::Hdbscan { points, m_pts } => {
            let r = hdbscan(&points, &HdbscanConfig { m_pts }).map_err(err)?;
            (points, r)
        }
    };
    serde_json::to_string(&describe(&points, result)).map_err(err)
}

#[wasm_bindgen]
pub fn trace_document(record: &str, template_headline: bool) -> Result<String, JsError> {
    trace_document_json(record, template_headline).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn train_two_block(params: &str) -> Result<String, JsError> {
    train_two_block_json(params).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cluster_points(request: &str) -> Result<String, JsError> {
    cluster_points_json(request).map_err(|e| JsError::new(&e))
}
