//! Learning-to-rank recommendation models trained from scratch.
//!
//! The crate builds user and item towers out of embedding tables and small
//! MLPs, and trains them with pointwise cross-entropy, pairwise logistic loss,
//! or both. The three-tower model keeps a momentum copy of the item tower that
//! is updated only by exponential moving average; the gap between the two item
//! representations down-weights pointwise labels that look unreliable.
//!
//! All math is generic over the scalar type ([`Scalar`], implemented for `f32`
//! and `f64`). Training code defaults to `f64` through the aliases below.
//!
//! Module map:
//!
//! - [`numerics`]: dense matrices, initialization, SGD/Adam, finite differences
//! - [`layers`]: feature transforms, embedding lookup, MLP forward/backward
//! - [`losses`]: pointwise, pairwise, weighted pointwise, L2, total loss
//! - [`models`]: the six model kinds, momentum update, training step, checkpoints
//! - [`data`]: ratings parsing, pair sampling, splits, negatives, batching
//! - [`eval`]: HitRate@K / NDCG@K under sampled candidates

pub mod data;
pub mod error;
pub mod eval;
pub mod layers;
pub mod losses;
pub mod models;
pub mod numerics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Row-major `f64` matrix.
pub type Matrix = numerics::Matrix<f64>;
/// Row-major `f32` matrix.
pub type Matrix32 = numerics::Matrix<f32>;
/// Model state with `f64` parameters, the default for training.
pub type Model = models::ModelState<f64>;
/// Model state with `f32` parameters.
pub type Model32 = models::ModelState<f32>;
/// Tower parameters with `f64` entries.
pub type Tower = layers::TowerParams<f64>;
/// Loss breakdown with `f64` components.
pub type Losses = losses::LossBreakdown<f64>;
