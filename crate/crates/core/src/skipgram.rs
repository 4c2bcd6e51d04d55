//! Cross-modal skip-gram over perception traces.
//!
//! Every token of a trace predicts the tokens within `window` positions on
//! either side, whatever their modality. The default objective is the full
//! softmax over the combined text + image vocabulary,
//!
//! ```text
//! p(o | c) = exp(u_o · v_c) / Σ_j exp(u_j · v_c)
//! ```
//!
//! with `v` the target (center) matrix and `u` the context matrix, trained
//! pair-by-pair with RMSprop. Target rows start from the reduced pre-trained
//! vectors; context rows start from the truncated normal used elsewhere.

use std::collections::{BTreeSet, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{RmsProp, RmsPropConfig};
use crate::rng::{seeded, truncated_normal, SeededRng, TRUNCATION};
use crate::trace::{split_tag, PerceptionTrace};
use crate::vectors::VectorTable;

/// Sorted distinct tokens with a dense index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let tokens: Vec<String> = sorted.into_iter().collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    fn require(&self, token: &str) -> Result<usize> {
        self.index_of(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))
    }
}

pub fn build_vocab(traces: &[PerceptionTrace]) -> Result<Vocab> {
    let vocab = Vocab::from_tokens(traces.iter().flat_map(|t| t.token_strings()));
    if vocab.is_empty() {
        return Err(Error::Empty("trace corpus"));
    }
    Ok(vocab)
}

/// Position pairs `(p, q)` with `0 < |p - q| <= window`, for a sequence of
/// length `len`, ordered by `p` then `q`.
pub fn pair_positions(len: usize, window: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for p in 0..len {
        let lo = p.saturating_sub(window);
        let hi = (p + window).min(len.saturating_sub(1));
        for q in lo..=hi {
            if q != p {
                pairs.push((p, q));
            }
        }
    }
    pairs
}

/// (center, context) pairs for one sequence.
pub fn generate_pairs<T: Clone>(tokens: &[T], window: usize) -> Vec<(T, T)> {
    pair_positions(tokens.len(), window)
        .into_iter()
        .map(|(p, q)| (tokens[p].clone(), tokens[q].clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    FullSoftmax,
    /// Extension for large vocabularies: `negatives` noise tokens per pair
    /// drawn from the unigram distribution raised to 3/4.
    NegativeSampling {
        negatives: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub objective: Objective,
    /// Shuffle pair order at the start of every epoch.
    pub shuffle_pairs: bool,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    /// Worker threads. More than one trains shards on model copies and
    /// averages them per epoch; results then depend on the thread count.
    pub threads: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            window: 5,
            epochs: 10,
            learning_rate: 0.001,
            seed: 0,
            objective: Objective::FullSoftmax,
            shuffle_pairs: true,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
            threads: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid("window", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be a positive number"));
        }
        if self.threads == 0 {
            return Err(Error::invalid("threads", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.rmsprop_decay) {
            return Err(Error::invalid("rmsprop_decay", "must be in [0, 1)"));
        }
        if let Objective::NegativeSampling { negatives: 0 } = self.objective {
            return Err(Error::invalid("negatives", "must be at least 1"));
        }
        Ok(())
    }

    fn rmsprop(&self) -> RmsPropConfig {
        RmsPropConfig {
            learning_rate: self.learning_rate,
            decay: self.rmsprop_decay,
            epsilon: self.rmsprop_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipgramModel {
    vocab: Vocab,
    dim: usize,
    /// `|vocab| × dim`, row-major.
    target: Vec<f64>,
    /// `|vocab| × dim`, row-major.
    context: Vec<f64>,
}

impl SkipgramModel {
    pub fn new(vocab: Vocab, dim: usize, target: Vec<f64>, context: Vec<f64>) -> Result<Self> {
        let expected = vocab.len() * dim;
        for m in [&target, &context] {
            if m.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: m.len(),
                });
            }
        }
        Ok(Self {
            vocab,
            dim,
            target,
            context,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn target_matrix(&self) -> &[f64] {
        &self.target
    }

    pub fn context_matrix(&self) -> &[f64] {
        &self.context
    }

    pub fn target_matrix_mut(&mut self) -> &mut [f64] {
        &mut self.target
    }

    pub fn context_matrix_mut(&mut self) -> &mut [f64] {
        &mut self.context
    }

    pub fn target_vec(&self, i: usize) -> &[f64] {
        &self.target[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context_vec(&self, i: usize) -> &[f64] {
        &self.context[i * self.dim..(i + 1) * self.dim]
    }

    /// `p(o | c)` for every vocabulary entry `o`, max-subtracted before
    /// exponentiation.
    pub fn output_distribution(&self, center: usize) -> Vec<f64> {
        let v = self.target_vec(center);
        let scores: Vec<f64> = (0..self.vocab.len())
            .map(|j| dot(self.context_vec(j), v))
            .collect();
        softmax(&scores)
    }

    pub fn softmax_prob(&self, center: &str, output: &str) -> Result<f64> {
        let c = self.vocab.require(center)?;
        let o = self.vocab.require(output)?;
        Ok(self.output_distribution(c)[o])
    }

    /// Table of target vectors, tokens in vocabulary order.
    pub fn target_table(&self) -> VectorTable {
        self.table_from(|i| self.target_vec(i).to_vec())
    }

    fn table_from(&self, row: impl Fn(usize) -> Vec<f64>) -> VectorTable {
        let mut t = VectorTable::new(self.dim);
        for (i, token) in self.vocab.tokens().iter().enumerate() {
            t.insert(token.as_str(), &row(i))
                .expect("vocabulary tokens are unique and finite");
        }
        t
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradients of one pair's loss: a dense row for the center's target vector
/// and sparse rows of the context matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    pub target_row: Vec<f64>,
    /// `(vocab index, gradient row)`
    pub context_rows: Vec<(usize, Vec<f64>)>,
}

/// `-ln p(o | c)` and its gradient with respect to `v_c` and every `u_j`.
pub fn full_softmax_gradient(model: &SkipgramModel, center: usize, output: usize) -> PairGradient {
    let d = model.dim;
    let probs = model.output_distribution(center);
    let v = model.target_vec(center);
    let mut target_row = vec![0.0; d];
    let mut context_rows = Vec::with_capacity(probs.len());
    for (j, &p) in probs.iter().enumerate() {
        let coeff = if j == output { p - 1.0 } else { p };
        let u = model.context_vec(j);
        for k in 0..d {
            target_row[k] += coeff * u[k];
        }
        context_rows.push((j, v.iter().map(|x| coeff * x).collect()));
    }
    PairGradient {
        loss: -probs[output].max(f64::MIN_POSITIVE).ln(),
        target_row,
        context_rows,
    }
}

/// `-ln σ(u_o·v_c) - Σ_n ln σ(-u_n·v_c)` and its gradient.
pub fn negative_sampling_gradient(
    model: &SkipgramModel,
    center: usize,
    output: usize,
    negatives: &[usize],
) -> PairGradient {
    let d = model.dim;
    let v = model.target_vec(center);
    let mut target_row = vec![0.0; d];
    let mut context_rows = Vec::with_capacity(negatives.len() + 1);
    let mut loss = 0.0;
    for (j, label) in std::iter::once((output, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0))) {
        let u = model.context_vec(j);
        let s = sigmoid(dot(u, v));
        loss -= if label == 1.0 { s } else { 1.0 - s }
            .max(f64::MIN_POSITIVE)
            .ln();
        let coeff = s - label;
        for k in 0..d {
            target_row[k] += coeff * u[k];
        }
        context_rows.push((j, v.iter().map(|x| coeff * x).collect()));
    }
    PairGradient {
        loss,
        target_row,
        context_rows,
    }
}

/// Training result and bookkeeping for the run metadata.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SkipgramModel,
    /// Mean pair loss in each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
    /// Trace tokens without a reduced vector; they are removed before pairing.
    pub skipped_tokens: usize,
    pub pairs_per_epoch: usize,
    /// False when multi-threaded training made results depend on scheduling.
    pub bit_reproducible: bool,
}

struct Trainer {
    model: SkipgramModel,
    target_opt: RmsProp,
    context_opt: RmsProp,
}

impl Trainer {
    fn apply(&mut self, center: usize, g: &PairGradient) {
        let d = self.model.dim;
        for (j, row) in &g.context_rows {
            let off = j * d;
            self.context_opt
                .step_at(off, &mut self.model.context[off..off + d], row);
        }
        let off = center * d;
        self.target_opt
            .step_at(off, &mut self.model.target[off..off + d], &g.target_row);
    }

    fn run(
        &mut self,
        pairs: &[(usize, usize)],
        objective: Objective,
        noise: Option<&WeightedIndex<f64>>,
        rng: &mut SeededRng,
    ) -> f64 {
        let mut total = 0.0;
        let mut negatives = Vec::new();
        for &(c, o) in pairs {
            let g = match objective {
                Objective::FullSoftmax => full_softmax_gradient(&self.model, c, o),
                Objective::NegativeSampling { negatives: k } => {
                    let noise = noise.expect("noise distribution");
                    negatives.clear();
                    while negatives.len() < k {
                        let n = noise.sample(rng);
                        if n != o {
                            negatives.push(n);
                        } else if self.model.vocab.len() == 1 {
                            break;
                        }
                    }
                    negative_sampling_gradient(&self.model, c, o, &negatives)
                }
            };
            total += g.loss;
            self.apply(c, &g);
        }
        total
    }
}

/// Initial model: target rows copied from `reduced`, context rows from the
/// truncated normal. Tokens missing from `reduced` are dropped from the
/// traces first; the returned sequences are vocabulary indices.
pub fn initialize(
    traces: &[PerceptionTrace],
    reduced: &VectorTable,
    rng: &mut SeededRng,
) -> Result<(SkipgramModel, Vec<Vec<usize>>, usize)> {
    let mut skipped = 0usize;
    let kept: Vec<Vec<String>> = traces
        .iter()
        .map(|t| {
            t.token_strings()
                .into_iter()
                .filter(|s| {
                    let ok = reduced.contains(s);
                    if !ok {
                        skipped += 1;
                    }
                    ok
                })
                .collect()
        })
        .collect();
    if skipped > 0 {
        log::warn!("{skipped} trace tokens have no reduced vector and were skipped");
    }
    let vocab = Vocab::from_tokens(kept.iter().flatten().cloned());
    if vocab.is_empty() {
        return Err(Error::Empty("trace corpus after dropping unknown tokens"));
    }
    let dim = reduced.dim();
    let mut target = Vec::with_capacity(vocab.len() * dim);
    for token in vocab.tokens() {
        target.extend_from_slice(reduced.get(token).expect("filtered above"));
    }
    let context = (0..vocab.len() * dim)
        .map(|_| truncated_normal(rng, TRUNCATION))
        .collect();
    let sequences = kept
        .iter()
        .map(|t| t.iter().map(|s| vocab.index_of(s).unwrap()).collect())
        .collect();
    let model = SkipgramModel::new(vocab, dim, target, context)?;
    Ok((model, sequences, skipped))
}

fn noise_distribution(sequences: &[Vec<usize>], vocab_len: usize) -> WeightedIndex<f64> {
    let mut counts = vec![0.0f64; vocab_len];
    for s in sequences {
        for &i in s {
            counts[i] += 1.0;
        }
    }
    WeightedIndex::new(counts.iter().map(|c| c.powf(0.75))).expect("non-empty vocabulary")
}

pub fn train(
    traces: &[PerceptionTrace],
    reduced: &VectorTable,
    config: &TrainingConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut rng = seeded(config.seed);
    let (model, sequences, skipped_tokens) = initialize(traces, reduced, &mut rng)?;

    let mut pairs: Vec<(usize, usize)> = sequences
        .iter()
        .flat_map(|s| generate_pairs(s, config.window))
        .collect();
    let noise = match config.objective {
        Objective::NegativeSampling { .. } => {
            Some(noise_distribution(&sequences, model.vocab.len()))
        }
        Objective::FullSoftmax => None,
    };

    let len = model.vocab.len() * model.dim;
    let mut trainer = Trainer {
        model,
        target_opt: RmsProp::new(config.rmsprop(), len),
        context_opt: RmsProp::new(config.rmsprop(), len),
    };
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        if config.shuffle_pairs {
            pairs.shuffle(&mut rng);
        }
        let total = if config.threads <= 1 || pairs.len() < config.threads {
            trainer.run(&pairs, config.objective, noise.as_ref(), &mut rng)
        } else {
            run_sharded(&mut trainer, &pairs, config, noise.as_ref(), &mut rng)
        };
        let mean = if pairs.is_empty() {
            0.0
        } else {
            total / pairs.len() as f64
        };
        let finite = mean.is_finite()
            && trainer.model.target.iter().all(|x| x.is_finite())
            && trainer.model.context.iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::Divergence { epoch });
        }
        log::debug!("skipgram epoch {epoch}: mean loss {mean:.6}");
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome {
        model: trainer.model,
        epoch_losses,
        skipped_tokens,
        pairs_per_epoch: pairs.len(),
        bit_reproducible: config.threads <= 1,
    })
}

/// One epoch over `threads` contiguous shards, each on its own copy of the
/// model and optimizer state; parameters and state are averaged afterwards.
fn run_sharded(
    trainer: &mut Trainer,
    pairs: &[(usize, usize)],
    config: &TrainingConfig,
    noise: Option<&WeightedIndex<f64>>,
    rng: &mut SeededRng,
) -> f64 {
    use rand::Rng;
    let shard_len = pairs.len().div_ceil(config.threads);
    let seeds: Vec<u64> = (0..config.threads).map(|_| rng.random()).collect();
    let results: Vec<(f64, Trainer)> = std::thread::scope(|scope| {
        let handles: Vec<_> = pairs
            .chunks(shard_len)
            .zip(&seeds)
            .map(|(shard, &seed)| {
                let mut local = Trainer {
                    model: trainer.model.clone(),
                    target_opt: trainer.target_opt.clone(),
                    context_opt: trainer.context_opt.clone(),
                };
                scope.spawn(move || {
                    let mut rng = seeded(seed);
                    let loss = local.run(shard, config.objective, noise, &mut rng);
                    (loss, local)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training shard panicked"))
            .collect()
    });
    let n = results.len() as f64;
    let average = |dst: &mut [f64], pick: &dyn Fn(&Trainer) -> &[f64]| {
        dst.iter_mut().for_each(|x| *x = 0.0);
        for (_, t) in &results {
            for (d, s) in dst.iter_mut().zip(pick(t)) {
                *d += s / n;
            }
        }
    };
    average(&mut trainer.model.target, &|t| &t.model.target);
    average(&mut trainer.model.context, &|t| &t.model.context);
    average(trainer.target_opt.mean_square_mut(), &|t| {
        t.target_opt.mean_square()
    });
    average(trainer.context_opt.mean_square_mut(), &|t| {
        t.context_opt.mean_square()
    });
    results.iter().map(|(l, _)| l).sum()
}

/// Component-wise sum of the target and context vectors of every token.
pub fn combine_target_context(model: &SkipgramModel) -> VectorTable {
    model.table_from(|i| {
        model
            .target_vec(i)
            .iter()
            .zip(model.context_vec(i))
            .map(|(a, b)| a + b)
            .collect()
    })
}

/// Sums the per-modality vectors of each entity into one untagged vector.
/// Untagged input tokens are treated as their own entity. Output rows follow
/// the first appearance of each entity in `table`.
pub fn combine_modalities(table: &VectorTable) -> VectorTable {
    let mut order: Vec<String> = Vec::new();
    let mut sums: HashMap<String, Vec<f64>> = HashMap::new();
    for (token, v) in table.iter() {
        let entity = split_tag(token).map_or(token, |(e, _)| e);
        match sums.get_mut(entity) {
            Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a += b),
            None => {
                order.push(entity.to_string());
                sums.insert(entity.to_string(), v.to_vec());
            }
        }
    }
    let mut out = VectorTable::new(table.dim());
    for entity in order {
        let v = &sums[&entity];
        out.insert(entity.as_str(), v)
            .expect("entities are unique and sums of finite values");
    }
    out
}
