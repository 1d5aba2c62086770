//! Noise-tolerant embeddings for text-rich product graphs.
//!
//! Titles and attribute values are free text, encoded by a shallow multi-width
//! convolutional encoder; attributes are learned relation vectors scored with
//! TransE or RotatE. Training uses negative sampling, optionally weighted by a
//! learnable per-triple confidence that marks down triples the rest of the graph
//! disagrees with. Low-scoring triples are reported as likely errors.

pub mod checkpoint;
pub mod config;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod kg;
pub mod model;
pub mod rng;
pub mod scoring;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
