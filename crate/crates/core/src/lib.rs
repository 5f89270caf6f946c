//! Self-supervised pre-training of text-line recognizers.
//!
//! The crate covers the full desk-scale pipeline: synthetic corpus
//! generation, augmentation and shift-cropped view pairs, ViT / VggT
//! sequence backbones, discrete label generation (feature quantization,
//! VQ-VAE, post-quantized AE), masked and joint-embedding pre-training,
//! CTC fine-tuning with CER evaluation, and diagnostic visualizations.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! `f32` is the training default, `f64` is used by the gradient-check
//! and oracle suites.

pub mod dataset;
pub mod error;
pub mod nn;
pub mod scalar;
pub mod seeds;
pub mod tape;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default training precision.
pub type F = f32;

/// Concrete aliases for the two supported precisions.
pub type Tape32 = tape::Tape<f32>;
pub type Tape64 = tape::Tape<f64>;
