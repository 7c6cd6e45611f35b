//! Question-to-query neural parser: a relation-aware transformer encoder
//! over the question and its candidate entities and relations, and an
//! LSTM pointer decoder that emits keywords, entities and relations.
//!
//! Everything runs in `f64` on a small reverse-mode tape so gradients can be
//! checked against finite differences.

pub mod autograd;
pub mod checkpoint;
pub mod config;
pub mod gradcheck;
pub mod input;
pub mod model;
pub mod params;
pub mod predict;
pub mod schedule;
pub mod train;
pub mod vocab;

pub use checkpoint::CheckpointError;
pub use config::{ConfigError, ModelConfig, RunConfig, TrainConfig};
pub use model::{Decoded, Example, Model, ModelError};
pub use train::{EpochLog, TrainError};
