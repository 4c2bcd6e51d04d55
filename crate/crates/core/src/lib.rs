//! Cross-modal entity embeddings learned from perception traces.
//!
//! The pipeline has five stages, each in its own module:
//!
//! 1. [`corpus`]: scene-graph documents are filtered and turned into
//!    headline + summary documents using degree-centrality salience.
//! 2. [`trace`]: each generated document is linearized into a perception
//!    trace of modality-tagged entity tokens (`dog#t`, `dog#i`).
//! 3. [`vectors`]: pre-trained text and image vectors are reduced to a
//!    common dimensionality with one autoencoder per modality.
//! 4. [`skipgram`]: a full-softmax skip-gram model is trained over the
//!    traces, then target and context matrices and modalities are summed.
//! 5. [`eval`]: rank correlation against similarity datasets, PCA and
//!    clustering with validity indices.
//!
//! [`cli`] binds the stages to the `perceptrace` command.

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod io;
pub mod optim;
pub mod rng;
pub mod skipgram;
pub mod trace;
pub mod vectors;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
