//! Stage commands. Each reads its inputs from the config paths or from the
//! previous stage's output in the output directory, writes its outputs
//! atomically, and records the resolved config next to them.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{PipelineConfig, RESOLVED_CONFIG};
use crate::corpus::{
    filter_entities, generate_documents, load_scene_graphs, load_vocab, read_generated,
    write_generated,
};
use crate::error::{Error, Result};
use crate::eval::{run_evaluation, scatter_svg, SimilarityDataset};
use crate::io::write_atomic;
use crate::skipgram::{combine_modalities, combine_target_context, train, TrainingConfig};
use crate::trace::{extract_traces, read_traces, write_traces, Modality};
use crate::vectors::{
    encode_all, load_vectors, stack_reduced, train_autoencoder, write_vectors, VectorTable,
};

pub const DOCUMENTS: &str = "documents.jsonl";
pub const TRACES: &str = "traces.txt";
pub const REDUCED: &str = "reduced.vec";
pub const REDUCE_METADATA: &str = "reduce_metadata.json";
pub const TAGGED: &str = "trained_tagged.vec";
pub const JOINT: &str = "joint_tagged.vec";
pub const FINAL: &str = "final.vec";
pub const TRAIN_METADATA: &str = "train_metadata.json";
pub const REPORT_JSON: &str = "eval_report.json";
pub const REPORT_CSV: &str = "eval_report.csv";

#[derive(Debug, Parser)]
#[command(
    name = "perceptrace",
    version,
    about = "Cross-modal entity embeddings from perception traces"
)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Skip-gram worker threads. More than one forfeits bit-reproducibility.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Filter scene graphs and write headline + summary documents.
    Generate,
    /// Linearize generated documents into perception traces.
    Trace,
    /// Reduce text and image vectors with one autoencoder per modality.
    Reduce,
    /// Train skip-gram over the traces and write tagged, joint and final vectors.
    Train,
    /// Evaluate the final vectors.
    Eval,
    /// Run every stage in order.
    Pipeline,
}

impl Cli {
    pub fn resolve_config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.set_seed(seed);
        }
        if let Some(out) = &self.out {
            config.paths.out = out.clone();
        }
        if let Some(threads) = self.threads {
            config.skipgram.threads = threads;
        }
        config.validate()?;
        Ok(config)
    }
}

fn out_file(config: &PipelineConfig, name: &str) -> PathBuf {
    config.paths.out.join(name)
}

fn write_resolved(config: &PipelineConfig) -> Result<()> {
    write_atomic(
        &out_file(config, RESOLVED_CONFIG),
        config.to_toml().as_bytes(),
    )
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateSummary {
    pub input_documents: usize,
    pub after_filtering: usize,
    pub generated: usize,
}

pub fn cmd_generate(config: &PipelineConfig) -> Result<GenerateSummary> {
    let input = config
        .paths
        .require(&config.paths.scene_graphs, "scene_graphs")?;
    let docs = load_scene_graphs(input)?;
    let vocab = match &config.paths.vocab {
        Some(p) => Some(load_vocab(p)?),
        None => None,
    };
    let filtered = filter_entities(&docs, vocab.as_ref(), config.thresholds);
    let outcome = generate_documents(&filtered, &config.generate);
    if outcome.documents.is_empty() {
        return Err(Error::Empty(
            "generated documents (check the filter thresholds)",
        ));
    }
    write_generated(&outcome.documents, &out_file(config, DOCUMENTS))?;
    write_resolved(config)?;
    let summary = GenerateSummary {
        input_documents: docs.len(),
        after_filtering: filtered.len(),
        generated: outcome.documents.len(),
    };
    log::info!("generate: {summary:?}");
    Ok(summary)
}

pub fn cmd_trace(config: &PipelineConfig) -> Result<usize> {
    let docs = read_generated(&out_file(config, DOCUMENTS))?;
    let traces = extract_traces(&docs)?;
    write_traces(&traces, &out_file(config, TRACES))?;
    write_resolved(config)?;
    log::info!("trace: {} traces", traces.len());
    Ok(traces.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalityReduction {
    pub rows: usize,
    pub input_dim: usize,
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReduceMetadata {
    pub hidden_dim: usize,
    pub seed: u64,
    pub text: Option<ModalityReduction>,
    pub image: Option<ModalityReduction>,
}

fn restrict(
    table: VectorTable,
    vocab: Option<&std::collections::HashSet<String>>,
) -> Result<VectorTable> {
    let Some(vocab) = vocab else {
        return Ok(table);
    };
    VectorTable::from_rows(
        table.dim(),
        table
            .iter()
            .filter(|(t, _)| vocab.contains(*t))
            .map(|(t, v)| (t.to_string(), v.to_vec())),
    )
}

fn reduce_one(
    table: &VectorTable,
    config: &PipelineConfig,
    modality: Modality,
) -> Result<(VectorTable, Option<ModalityReduction>)> {
    if table.is_empty() {
        log::warn!("no {modality:?} vectors to reduce");
        return Ok((VectorTable::new(config.autoencoder.hidden_dim), None));
    }
    let (params, loss) = train_autoencoder(table, &config.autoencoder)?;
    let encoded = encode_all(&params, table, modality)?;
    let meta = ModalityReduction {
        rows: table.len(),
        input_dim: table.dim(),
        initial_loss: loss.initial,
        epoch_losses: loss.epochs,
    };
    Ok((encoded, Some(meta)))
}

pub fn cmd_reduce(config: &PipelineConfig) -> Result<ReduceMetadata> {
    let paths = &config.paths;
    let text = load_vectors(paths.require(&paths.text_vectors, "text_vectors")?, None)?;
    let image = load_vectors(paths.require(&paths.image_vectors, "image_vectors")?, None)?;
    let vocab = match &paths.vocab {
        Some(p) => Some(load_vocab(p)?),
        None => None,
    };
    let text = restrict(text, vocab.as_ref())?;
    let image = restrict(image, vocab.as_ref())?;
    let (text_red, text_meta) = reduce_one(&text, config, Modality::Text)?;
    let (image_red, image_meta) = reduce_one(&image, config, Modality::Image)?;
    let reduced = stack_reduced(&text_red, &image_red)?;
    if reduced.is_empty() {
        return Err(Error::Empty("reduced vector table"));
    }
    let meta = ReduceMetadata {
        hidden_dim: config.autoencoder.hidden_dim,
        seed: config.autoencoder.seed,
        text: text_meta,
        image: image_meta,
    };
    write_vectors(&reduced, &out_file(config, REDUCED))?;
    write_json(&out_file(config, REDUCE_METADATA), &meta)?;
    write_resolved(config)?;
    log::info!(
        "reduce: {} rows of dimension {}",
        reduced.len(),
        reduced.dim()
    );
    Ok(meta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainMetadata {
    pub config: TrainingConfig,
    pub seed: u64,
    pub vocab_size: usize,
    pub dim: usize,
    pub pairs_per_epoch: usize,
    pub skipped_tokens: usize,
    pub epoch_losses: Vec<f64>,
    pub threads: usize,
    pub bit_reproducible: bool,
}

pub fn cmd_train(config: &PipelineConfig) -> Result<TrainMetadata> {
    let traces = read_traces(&out_file(config, TRACES))?;
    let reduced = load_vectors(&out_file(config, REDUCED), None)?;
    let outcome = train(&traces, &reduced, &config.skipgram)?;
    let tagged = outcome.model.target_table();
    let joint = combine_target_context(&outcome.model);
    let final_table = combine_modalities(&joint);
    write_vectors(&tagged, &out_file(config, TAGGED))?;
    write_vectors(&joint, &out_file(config, JOINT))?;
    write_vectors(&final_table, &out_file(config, FINAL))?;
    let meta = TrainMetadata {
        config: config.skipgram,
        seed: config.skipgram.seed,
        vocab_size: outcome.model.vocab().len(),
        dim: outcome.model.dim(),
        pairs_per_epoch: outcome.pairs_per_epoch,
        skipped_tokens: outcome.skipped_tokens,
        epoch_losses: outcome.epoch_losses,
        threads: config.skipgram.threads,
        bit_reproducible: outcome.bit_reproducible,
    };
    write_json(&out_file(config, TRAIN_METADATA), &meta)?;
    write_resolved(config)?;
    log::info!(
        "train: {} tokens, {} pairs per epoch, final loss {:?}",
        meta.vocab_size,
        meta.pairs_per_epoch,
        meta.epoch_losses.last()
    );
    Ok(meta)
}

pub fn cmd_eval(config: &PipelineConfig) -> Result<crate::eval::EvalReport> {
    let table = load_vectors(&out_file(config, FINAL), None)?;
    let datasets = config
        .paths
        .similarity
        .iter()
        .map(|p| SimilarityDataset::load(p))
        .collect::<Result<Vec<_>>>()?;
    let report = run_evaluation(&table, &datasets, &config.eval)?;
    write_atomic(&out_file(config, REPORT_JSON), report.to_json().as_bytes())?;
    write_atomic(&out_file(config, REPORT_CSV), report.to_csv().as_bytes())?;
    if let Some(plane) = &report.plane {
        for c in &report.clustering {
            let svg = scatter_svg(
                &format!(
                    "PCA projection, {} clusters ({})",
                    c.n_clusters, c.algorithm
                ),
                table.tokens(),
                plane,
                &c.result.labels,
            );
            write_atomic(
                &out_file(config, &format!("pca_{}.svg", c.algorithm)),
                svg.as_bytes(),
            )?;
        }
    }
    write_resolved(config)?;
    log::info!(
        "eval: weighted rho {:?}",
        report.similarity.weighted_average
    );
    Ok(report)
}

pub fn cmd_pipeline(config: &PipelineConfig) -> Result<()> {
    cmd_generate(config)?;
    cmd_trace(config)?;
    cmd_reduce(config)?;
    cmd_train(config)?;
    cmd_eval(config)?;
    Ok(())
}

pub fn run_command(command: Command, config: &PipelineConfig) -> Result<()> {
    match command {
        Command::Generate => cmd_generate(config).map(drop),
        Command::Trace => cmd_trace(config).map(drop),
        Command::Reduce => cmd_reduce(config).map(drop),
        Command::Train => cmd_train(config).map(drop),
        Command::Eval => cmd_eval(config).map(drop),
        Command::Pipeline => cmd_pipeline(config),
    }
}

/// Entry point used by the binary.
pub fn main_with(cli: Cli) -> anyhow::Result<()> {
    let config = cli.resolve_config()?;
    run_command(cli.command, &config)?;
    Ok(())
}
