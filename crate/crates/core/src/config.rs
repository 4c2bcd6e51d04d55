//! Pipeline configuration: a TOML file of per-stage sections. Every field
//! has a default, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{FilterThresholds, GenerateOptions};
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::skipgram::{Objective, TrainingConfig};
use crate::vectors::AutoencoderConfig;

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Scene-graph JSONL input.
    pub scene_graphs: Option<PathBuf>,
    /// Entity vocabulary, one name per line.
    pub vocab: Option<PathBuf>,
    pub text_vectors: Option<PathBuf>,
    pub image_vectors: Option<PathBuf>,
    pub similarity: Vec<PathBuf>,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            scene_graphs: None,
            vocab: None,
            text_vectors: None,
            image_vectors: None,
            similarity: Vec::new(),
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub thresholds: FilterThresholds,
    pub generate: GenerateOptions,
    pub autoencoder: AutoencoderConfig,
    pub skipgram: TrainingConfig,
    pub eval: EvalConfig,
}

fn field(name: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: name.to_string(),
        message: message.into(),
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| field("<document>", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field(&path, e.into_inner().message().to_string())
        })
    }

    /// Loads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        let base = std::path::absolute(path)
            .map_err(|e| Error::io(path, e))?
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        config.paths.rebase(&base);
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Sets every stage seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.autoencoder.seed = seed;
        self.skipgram.seed = seed;
        self.eval.affinity.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.generate;
        if g.max_sentences == 0 {
            return Err(field("generate.max_sentences", "must be at least 1"));
        }
        if g.min_sentences > g.max_sentences {
            return Err(field(
                "generate.min_sentences",
                "exceeds generate.max_sentences",
            ));
        }
        let ae = &self.autoencoder;
        if ae.hidden_dim == 0 {
            return Err(field("autoencoder.hidden_dim", "must be at least 1"));
        }
        if ae.batch_size == 0 {
            return Err(field("autoencoder.batch_size", "must be at least 1"));
        }
        if !(ae.adam.learning_rate > 0.0 && ae.adam.learning_rate.is_finite()) {
            return Err(field(
                "autoencoder.adam.learning_rate",
                "must be a positive number",
            ));
        }
        self.skipgram.validate().map_err(|e| match e {
            Error::InvalidArgument { name, message } => field(&format!("skipgram.{name}"), message),
            other => other,
        })?;
        let ev = &self.eval;
        if !(0.5..1.0).contains(&ev.affinity.damping) {
            return Err(field("eval.affinity.damping", "must be in [0.5, 1)"));
        }
        if ev.affinity.max_iter == 0 {
            return Err(field("eval.affinity.max_iter", "must be at least 1"));
        }
        if ev.affinity.convergence_window == 0 {
            return Err(field(
                "eval.affinity.convergence_window",
                "must be at least 1",
            ));
        }
        if ev.hdbscan.m_pts < 2 {
            return Err(field("eval.hdbscan.m_pts", "must be at least 2"));
        }
        if ev.pca_k == 0 {
            return Err(field("eval.pca_k", "must be at least 1"));
        }
        if !(ev.variance_fraction > 0.0 && ev.variance_fraction <= 1.0) {
            return Err(field("eval.variance_fraction", "must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn objective_label(&self) -> &'static str {
        match self.skipgram.objective {
            Objective::FullSoftmax => "full-softmax",
            Objective::NegativeSampling { .. } => "negative-sampling",
        }
    }
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.scene_graphs,
            &mut self.vocab,
            &mut self.text_vectors,
            &mut self.image_vectors,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.similarity.iter_mut().for_each(fix);
        fix(&mut self.out);
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| field(&format!("paths.{name}"), "required by this stage"))
    }
}
