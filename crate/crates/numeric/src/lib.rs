//! Minimal dense-tensor and reverse-mode differentiation kernel.
//!
//! Supplies exactly what a small transformer tracker needs: row-major
//! `f64` tensors, a tape ([`Graph`]) with hand-written backward rules,
//! linear / layer-norm / multi-head attention layers, AdamW with a linear
//! warmup schedule, finite-difference gradient checks, and bit-exact JSON
//! checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod params;
pub mod tensor;

pub use checkpoint::Checkpoint;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use graph::{neg_distances, softmax_rows, Graph, Var};
pub use layers::{Dropout, LayerNorm, Linear, MultiHeadAttention};
pub use params::{adamw_step, AdamWConfig, Gradients, ParamId, ParameterStore, WarmupSchedule};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NumericError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("model width {d} is not divisible by {n_heads} heads")]
    Divisibility { d: usize, n_heads: usize },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, NumericError>;
