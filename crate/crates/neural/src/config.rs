use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("model width d_x = {d_x} is not divisible by {heads} heads")]
    HeadSplit { d_x: usize, heads: usize },
    #[error("{name} = {value} must equal d_x = {d_x}: keyword, entity and relation rows share one attention space")]
    WidthMismatch { name: &'static str, value: usize, d_x: usize },
    #[error("dropout rate {0} outside [0, 1)")]
    Dropout(f64),
    #[error("cannot read config: {0}")]
    Parse(String),
}

/// Shapes and regularisation of the encoder/decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Attention heads per encoder layer.
    pub heads: usize,
    /// Encoder width; also the width of entity, relation and keyword rows.
    pub d_x: usize,
    /// Attention width used in the score scaling `sqrt(d_z / heads)`.
    pub d_z: usize,
    pub n_layers: usize,
    /// Hidden width of the encoder feed-forward sublayer.
    pub d_ff: usize,
    /// Decoder hidden width.
    pub d_h: usize,
    pub n_lstm: usize,
    /// Width of the token representation fed to the decoder.
    pub d_s: usize,
    pub d_keyword: usize,
    pub d_entity: usize,
    pub d_relation: usize,
    pub dropout_attn: f64,
    pub dropout_lstm: f64,
    pub max_decode_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            heads: 8,
            d_x: 256,
            d_z: 256,
            n_layers: 6,
            d_ff: 512,
            d_h: 512,
            n_lstm: 2,
            d_s: 256,
            d_keyword: 256,
            d_entity: 256,
            d_relation: 256,
            dropout_attn: 0.1,
            dropout_lstm: 0.2,
            max_decode_len: 64,
        }
    }
}

impl ModelConfig {
    /// A small configuration that trains in seconds.
    pub fn toy() -> Self {
        ModelConfig {
            heads: 4,
            d_x: 32,
            d_z: 32,
            n_layers: 2,
            d_ff: 64,
            d_h: 64,
            n_lstm: 1,
            d_s: 32,
            d_keyword: 32,
            d_entity: 32,
            d_relation: 32,
            dropout_attn: 0.0,
            dropout_lstm: 0.0,
            max_decode_len: 48,
        }
    }

    /// The gradient-check configuration: two heads, width eight.
    pub fn tiny() -> Self {
        ModelConfig {
            heads: 2,
            d_x: 8,
            d_z: 8,
            n_layers: 2,
            d_ff: 12,
            d_h: 6,
            n_lstm: 2,
            d_s: 5,
            d_keyword: 8,
            d_entity: 8,
            d_relation: 8,
            dropout_attn: 0.0,
            dropout_lstm: 0.0,
            max_decode_len: 16,
        }
    }

    pub fn head_width(&self) -> usize {
        self.d_x / self.heads
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("heads", self.heads),
            ("d_x", self.d_x),
            ("d_z", self.d_z),
            ("d_ff", self.d_ff),
            ("d_h", self.d_h),
            ("n_lstm", self.n_lstm),
            ("d_s", self.d_s),
            ("d_keyword", self.d_keyword),
            ("d_entity", self.d_entity),
            ("d_relation", self.d_relation),
        ] {
            if v == 0 {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if !self.d_x.is_multiple_of(self.heads) {
            return Err(ConfigError::HeadSplit {
                d_x: self.d_x,
                heads: self.heads,
            });
        }
        for (name, value) in [
            ("d_keyword", self.d_keyword),
            ("d_entity", self.d_entity),
            ("d_relation", self.d_relation),
        ] {
            if value != self.d_x {
                return Err(ConfigError::WidthMismatch { name, value, d_x: self.d_x });
            }
        }
        for r in [self.dropout_attn, self.dropout_lstm] {
            if !(0.0..1.0).contains(&r) {
                return Err(ConfigError::Dropout(r));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: ModelConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

/// Optimisation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub warmup_epochs: usize,
    pub decay: f64,
    pub seed: u64,
    /// Decode the dev set after each epoch to report exact match.
    pub eval_exact_match: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 15,
            batch_size: 16,
            peak_lr: 1e-3,
            warmup_epochs: 2,
            decay: 0.8,
            seed: 0,
            eval_exact_match: true,
        }
    }
}

/// Model and training settings read together from one config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        c.model.validate()?;
        if c.train.batch_size == 0 {
            return Err(ConfigError::NonPositive("batch_size"));
        }
        Ok(c)
    }
}
