//! A small laboratory for vector quantization.
//!
//! The centerpiece is a codebook reparameterized through a learnable latent
//! basis: codes are the rows of `C W`, with `C` a frozen Gaussian coefficient
//! matrix and `W` a square `d x d` matrix trained by gradient descent. Because
//! every selected code contributes to the gradient of `W`, the whole codebook
//! moves at every step, instead of only the handful of codes that happened to
//! be nearest to the encoder outputs.
//!
//! Alongside it live the classic baselines (plain VQ, EMA, FSQ, LFQ and the
//! low-dimensional factorized "FC" variant), a hand-differentiated MLP
//! autoencoder to train them in, the two-dimensional toy dynamics, and the
//! utilization / perplexity / basis-rank metrics used to detect collapse.
//!
//! See `examples/` for one runnable program per capability.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod quantizers;
pub mod training;

pub use error::{Result, VqError};
pub use numerics::{Matrix, RngStream};
