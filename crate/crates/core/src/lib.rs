//! ECG beat rebalancing with entropy-regularized optimal transport, and a
//! multi-feature transformer classifier to measure the effect.
//!
//! The pipeline runs ingest → dsp → features → ot (augmentation) → model → eval.

pub mod class;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod model;
pub mod ot;
pub mod par;
pub mod pipeline;

pub use class::{DiagnosticClass, N_CLASSES};
pub use error::{Error, Result};
