//! Multi-feature transformer classifier.
//!
//! A feature vector is cut into tokens, embedded linearly, offset by a
//! sinusoidal position table and passed through a stack of post-norm encoder
//! layers. The head is a 1-D convolution over the token axis, a mean over
//! tokens, an affine map and a softmax. Gradients are computed by a
//! hand-written reverse pass.

mod backprop;
mod checkpoint;
mod config;
mod layers;
mod params;
mod train;

pub use backprop::{gradient_check, loss_and_gradients, mean_loss, GradientCheck};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{ModelConfig, TrainConfig};
pub use layers::{
    encode, encoder_layer, forward, layer_norm, logits, multi_head_attention, positional_encoding, predict,
    scaled_dot_attention, LAYER_NORM_EPS,
};
pub use params::{expected_shapes, LayerParams, ModelParams};
pub use train::{accuracy, train, train_from, Dataset, EpochRecord, Standardizer, TrainingLog};
