//! Self-describing JSON checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ModelConfig};
use crate::model::Model;
use crate::params::ParamStore;
use crate::vocab::{InputVocab, OutputVocab};

const FORMAT: &str = "kbqa-checkpoint/1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot access checkpoint: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint configuration is invalid: {0}")]
    Config(#[from] ConfigError),
    #[error("checkpoint parameters do not match the configuration: {0}")]
    Shapes(String),
}

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    config: ModelConfig,
    input_vocab: InputVocab,
    output_vocab: OutputVocab,
    params: ParamStore,
}

pub fn to_json(model: &Model) -> String {
    let c = Container {
        format: FORMAT.into(),
        config: model.config.clone(),
        input_vocab: model.input_vocab.clone(),
        output_vocab: model.output_vocab.clone(),
        params: model.params.clone(),
    };
    serde_json::to_string(&c).expect("checkpoint serialises")
}

/// Reads a checkpoint and checks every tensor against a freshly built model
/// of the stored configuration.
pub fn from_json(text: &str) -> Result<Model, CheckpointError> {
    let mut c: Container = serde_json::from_str(text).map_err(|e| CheckpointError::Format(e.to_string()))?;
    if c.format != FORMAT {
        return Err(CheckpointError::Format(format!("unknown format tag `{}`", c.format)));
    }
    c.config.validate()?;
    c.input_vocab.reindex();
    c.output_vocab.reindex();
    let reference = Model::new(c.config.clone(), c.input_vocab.clone(), c.output_vocab.clone(), 0)
        .map_err(|e| CheckpointError::Format(e.to_string()))?;
    for (name, t) in reference.params.iter() {
        match c.params.get(name) {
            None => return Err(CheckpointError::Shapes(format!("missing tensor `{name}`"))),
            Some(p) if p.dim() != t.dim() => {
                return Err(CheckpointError::Shapes(format!(
                    "tensor `{name}` has shape {:?}, expected {:?}",
                    p.dim(),
                    t.dim()
                )))
            }
            Some(_) => {}
        }
    }
    if let Some(extra) = c.params.names().find(|n| reference.params.get(n).is_none()) {
        return Err(CheckpointError::Shapes(format!("unexpected tensor `{extra}`")));
    }
    Ok(Model {
        config: c.config,
        params: c.params,
        input_vocab: c.input_vocab,
        output_vocab: c.output_vocab,
    })
}

pub fn save(model: &Model, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, to_json(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model, CheckpointError> {
    from_json(&std::fs::read_to_string(path)?)
}
