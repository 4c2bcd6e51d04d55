//! Word-similarity benchmarks scored by cosine similarity.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rank::spearman;
use crate::corpus::normalize_name;
use crate::error::{Error, Result};
use crate::vectors::VectorTable;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    /// Parses `word1<TAB>word2<TAB>score` lines; `#` lines are comments.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: i + 1,
                message: format!("{name}: {message}"),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let score: f64 = fields[2]
                .trim()
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite())
                .ok_or_else(|| err(format!("bad score `{}`", fields[2])))?;
            let (a, b) = (normalize_name(fields[0]), normalize_name(fields[1]));
            let key = if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            if !seen.insert(key) {
                return Err(err(format!("duplicate pair ({a}, {b})")));
            }
            pairs.push((a, b, score));
        }
        Ok(Self {
            name: name.to_string(),
            pairs,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Self::parse(&name, &crate::io::read_to_string(path)?)
    }
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetScore {
    pub name: String,
    pub total_pairs: usize,
    pub coverage: usize,
    /// `None` when fewer than two pairs are covered or ranks are degenerate.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub datasets: Vec<DatasetScore>,
    /// Coverage-weighted mean of the per-dataset rho values.
    pub weighted_average: Option<f64>,
}

/// `Σ coverage_i · rho_i / Σ coverage_i` over the scored datasets.
pub fn weighted_average(scores: &[(usize, f64)]) -> Option<f64> {
    let total: usize = scores.iter().map(|(c, _)| c).sum();
    if total == 0 {
        return None;
    }
    Some(scores.iter().map(|&(c, r)| c as f64 * r).sum::<f64>() / total as f64)
}

pub fn eval_similarity(table: &VectorTable, datasets: &[SimilarityDataset]) -> SimilarityReport {
    let mut scores = Vec::new();
    let datasets = datasets
        .iter()
        .map(|ds| {
            let (human, model): (Vec<f64>, Vec<f64>) = ds
                .pairs
                .iter()
                .filter_map(|(a, b, s)| Some((*s, cosine(table.get(a)?, table.get(b)?))))
                .unzip();
            let rho = if human.len() < 2 {
                log::warn!("{}: {} covered pairs, excluded", ds.name, human.len());
                None
            } else {
                match spearman(&human, &model) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        log::warn!("{}: {e}, excluded", ds.name);
                        None
                    }
                }
            };
            if let Some(r) = rho {
                scores.push((human.len(), r));
            }
            DatasetScore {
                name: ds.name.clone(),
                total_pairs: ds.pairs.len(),
                coverage: human.len(),
                rho,
            }
        })
        .collect();
    SimilarityReport {
        datasets,
        weighted_average: weighted_average(&scores),
    }
}
