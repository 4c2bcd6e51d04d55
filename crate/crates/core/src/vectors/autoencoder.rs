//! One-hidden-layer autoencoder: `tanh` encoder, linear decoder, mean squared
//! reconstruction error, trained with Adam on seeded mini-batches.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::VectorTable;
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};
use crate::rng::{seeded, truncated_normal, TRUNCATION};
use crate::trace::{ModalToken, Modality};

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    /// `input_dim × hidden_dim`
    pub encode_weights: DMatrix<f64>,
    pub encode_bias: DVector<f64>,
    /// `hidden_dim × input_dim`
    pub decode_weights: DMatrix<f64>,
    pub decode_bias: DVector<f64>,
}

impl AutoencoderParams {
    pub fn input_dim(&self) -> usize {
        self.encode_weights.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.encode_weights.ncols()
    }

    /// Hidden activations for a batch of row vectors.
    pub fn encode(&self, batch: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = batch * &self.encode_weights;
        for mut row in z.row_iter_mut() {
            row += self.encode_bias.transpose();
        }
        z.map(f64::tanh)
    }

    pub fn decode(&self, hidden: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = hidden * &self.decode_weights;
        for mut row in y.row_iter_mut() {
            row += self.decode_bias.transpose();
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderGradients {
    pub encode_weights: DMatrix<f64>,
    pub encode_bias: DVector<f64>,
    pub decode_weights: DMatrix<f64>,
    pub decode_bias: DVector<f64>,
}

/// Weights from a standard normal truncated to `[-0.1, 0.1]`, biases zero.
pub fn init_autoencoder(input_dim: usize, hidden_dim: usize, seed: u64) -> AutoencoderParams {
    let mut rng = seeded(seed);
    init_with(&mut rng, input_dim, hidden_dim)
}

fn init_with<R: rand::Rng>(rng: &mut R, input_dim: usize, hidden_dim: usize) -> AutoencoderParams {
    assert!(
        input_dim >= 1 && hidden_dim >= 1,
        "dimensions must be positive"
    );
    let encode_weights = DMatrix::from_fn(input_dim, hidden_dim, |_, _| {
        truncated_normal(rng, TRUNCATION)
    });
    let decode_weights = DMatrix::from_fn(hidden_dim, input_dim, |_, _| {
        truncated_normal(rng, TRUNCATION)
    });
    AutoencoderParams {
        encode_weights,
        encode_bias: DVector::zeros(hidden_dim),
        decode_weights,
        decode_bias: DVector::zeros(input_dim),
    }
}

/// Mean over all batch entries of the squared reconstruction error.
pub fn loss(params: &AutoencoderParams, batch: &DMatrix<f64>) -> f64 {
    let recon = params.decode(&params.encode(batch));
    (recon - batch).map(|d| d * d).mean()
}

pub fn loss_and_gradients(
    params: &AutoencoderParams,
    batch: &DMatrix<f64>,
) -> (f64, AutoencoderGradients) {
    let hidden = params.encode(batch);
    let recon = params.decode(&hidden);
    let diff = recon - batch;
    let count = diff.len() as f64;
    let loss = diff.map(|d| d * d).sum() / count;

    let d_out = diff * (2.0 / count);
    let decode_weights = hidden.transpose() * &d_out;
    let decode_bias = column_sums(&d_out);
    let d_hidden = &d_out * params.decode_weights.transpose();
    let d_pre = d_hidden.zip_map(&hidden, |g, h| g * (1.0 - h * h));
    let encode_weights = batch.transpose() * &d_pre;
    let encode_bias = column_sums(&d_pre);
    (
        loss,
        AutoencoderGradients {
            encode_weights,
            encode_bias,
            decode_weights,
            decode_bias,
        },
    )
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 100,
            epochs: 5,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

/// Full-table reconstruction MSE before training and after each epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub initial: f64,
    pub epochs: Vec<f64>,
}

impl LossTrace {
    pub fn last(&self) -> f64 {
        self.epochs.last().copied().unwrap_or(self.initial)
    }
}

pub fn train_autoencoder(
    table: &VectorTable,
    config: &AutoencoderConfig,
) -> Result<(AutoencoderParams, LossTrace)> {
    if table.is_empty() {
        return Err(Error::Empty("vector table"));
    }
    if config.hidden_dim == 0 {
        return Err(Error::invalid("hidden_dim", "must be positive"));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch_size", "must be positive"));
    }
    let mut rng = seeded(config.seed);
    let mut params = init_with(&mut rng, table.dim(), config.hidden_dim);
    let data = table.to_matrix();

    let mut opt_we = Adam::new(config.adam, params.encode_weights.len());
    let mut opt_be = Adam::new(config.adam, params.encode_bias.len());
    let mut opt_wd = Adam::new(config.adam, params.decode_weights.len());
    let mut opt_bd = Adam::new(config.adam, params.decode_bias.len());

    let initial = loss(&params, &data);
    if !initial.is_finite() {
        return Err(Error::Divergence { epoch: 0 });
    }
    let mut trace = LossTrace {
        initial,
        epochs: Vec::with_capacity(config.epochs),
    };
    let mut order: Vec<usize> = (0..table.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch = data.select_rows(chunk);
            let (_, g) = loss_and_gradients(&params, &batch);
            opt_we.step(
                params.encode_weights.as_mut_slice(),
                g.encode_weights.as_slice(),
            );
            opt_be.step(params.encode_bias.as_mut_slice(), g.encode_bias.as_slice());
            opt_wd.step(
                params.decode_weights.as_mut_slice(),
                g.decode_weights.as_slice(),
            );
            opt_bd.step(params.decode_bias.as_mut_slice(), g.decode_bias.as_slice());
        }
        let l = loss(&params, &data);
        if !l.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        log::debug!("autoencoder epoch {epoch}: mse {l:.6}");
        trace.epochs.push(l);
    }
    Ok((params, trace))
}

/// Maps every row to its hidden activation and tags the token with the
/// modality suffix (`dog` → `dog#t`).
pub fn encode_all(
    params: &AutoencoderParams,
    table: &VectorTable,
    modality: Modality,
) -> Result<VectorTable> {
    if table.dim() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            found: table.dim(),
        });
    }
    let mut out = VectorTable::new(params.hidden_dim());
    if table.is_empty() {
        return Ok(out);
    }
    let hidden = params.encode(&table.to_matrix());
    for (i, token) in table.tokens().iter().enumerate() {
        let tagged = ModalToken::new(token.as_str(), modality)?.to_string();
        let row: Vec<f64> = hidden.row(i).iter().copied().collect();
        out.insert(tagged, &row)?;
    }
    Ok(out)
}
