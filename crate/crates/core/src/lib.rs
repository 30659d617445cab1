//! Noisy-label dialogue state tracking with auxiliary pseudo labels.
//!
//! The crate covers the data model ([`dialogue`]), synthetic corpora and
//! label corruption ([`corpus`]), the slot-attention tracker ([`tracker`]),
//! the auxiliary/primary training pipeline ([`pipeline`]), closed forms and
//! Monte Carlo checks for combined-label error ([`theory`]) and evaluation
//! ([`metrics`]).

pub mod corpus;
pub mod dialogue;
pub mod exec;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod theory;
pub mod tracker;

pub use exec::Execution;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Numeric(#[from] assist_numeric::NumericError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
