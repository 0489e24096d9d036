use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the classifier.
///
/// The input vector of `input_len` values is cut into `seq_len` contiguous
/// tokens of `input_len / seq_len` values each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input_len: usize,
    pub seq_len: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_k: usize,
    pub d_v: usize,
    pub d_ff: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub conv_kernel: usize,
    pub conv_channels: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_len: 672,
            seq_len: 28,
            d_model: 64,
            n_layers: 5,
            n_heads: 4,
            d_k: 16,
            d_v: 16,
            d_ff: 128,
            n_classes: crate::N_CLASSES,
            dropout: 0.1,
            conv_kernel: 3,
            conv_channels: 64,
        }
    }
}

impl ModelConfig {
    pub fn token_width(&self) -> usize {
        self.input_len / self.seq_len.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_len", self.input_len),
            ("seq_len", self.seq_len),
            ("d_model", self.d_model),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_k", self.d_k),
            ("d_v", self.d_v),
            ("d_ff", self.d_ff),
            ("conv_kernel", self.conv_kernel),
            ("conv_channels", self.conv_channels),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        if self.n_classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        if self.input_len % self.seq_len != 0 {
            return Err(Error::invalid(format!(
                "input length {} is not a multiple of seq_len {}",
                self.input_len, self.seq_len
            )));
        }
        if self.d_model != self.n_heads * self.d_k {
            return Err(Error::invalid(format!(
                "d_model {} != n_heads {} * d_k {}",
                self.d_model, self.n_heads, self.d_k
            )));
        }
        if self.d_model % 2 != 0 {
            return Err(Error::invalid("d_model must be even"));
        }
        if self.conv_kernel % 2 == 0 {
            return Err(Error::invalid("conv_kernel must be odd"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Loss above this aborts training.
    pub divergence_loss: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 30,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            divergence_loss: 1e3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be finite and non-negative"));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::invalid("batch size and epochs must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        Ok(())
    }
}
