//! Node classifier: an MLP encoder, a stack of fractional heat or
//! Schrödinger Euler layers with learnable exponent, step and channel
//! mixer, and an MLP decoder, trained with Adam.

mod checkpoint;
mod flode;
mod gradcheck;
mod optim;
pub mod tape;
mod train;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Scheme, Sign};
use crate::error::{invalid, Result};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use flode::{accuracy, dominance_audit, evaluate, forward, init_model, loss_and_grads, FlodeModel, Gradients};
pub use gradcheck::{gradient_check, GradCheckReport, GRADCHECK_STEP};
pub use optim::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use train::{train, EpochRecord, History, TrainOutcome, TrainStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden_channels: usize,
    pub num_layers: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub input_dropout: f64,
    pub decoder_dropout: f64,
    pub scheme: Scheme,
    pub sign: Sign,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_channels: 64,
            num_layers: 2,
            encoder_layers: 1,
            decoder_layers: 1,
            input_dropout: 0.1,
            decoder_dropout: 0.1,
            scheme: Scheme::Heat,
            sign: Sign::Minus,
            learning_rate: 5e-3,
            weight_decay: 1e-3,
            max_epochs: 1000,
            patience: 200,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_channels == 0 || self.num_layers == 0 || self.encoder_layers == 0 || self.decoder_layers == 0 {
            return Err(invalid("channel and layer counts must be positive"));
        }
        for (name, p) in [("input_dropout", self.input_dropout), ("decoder_dropout", self.decoder_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return Err(invalid(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(invalid("weight_decay must be nonnegative"));
        }
        Ok(())
    }
}

/// Role of a parameter; only [`ParamKind::Weight`] is weight-decayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Weight,
    Bias,
    Exponent,
    StepRe,
    StepIm,
    MixerRe,
    MixerIm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
    pub value: nalgebra::DMatrix<f64>,
}
