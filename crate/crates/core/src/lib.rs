//! Sarcasm classification of online comments with optional author context.
//!
//! A bidirectional GRU encodes a comment from pretrained word vectors. The
//! encoding is concatenated with an author feature and fed to a small
//! feed-forward head. Three variants differ only in the author feature:
//! none, smoothed per-author label counts, or a learned author vector.

pub mod corpus;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod textprep;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{init_model, ModelConfig, ModelParams, Variant};
pub use trainer::{train, TrainConfig};
