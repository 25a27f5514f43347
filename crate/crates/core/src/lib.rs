//! Strategy-controllable empathetic dialogue generation.
//!
//! The crate covers the whole pipeline: loading strategy-annotated dialogue
//! corpora, augmenting histories with verbalized commonsense knowledge,
//! training a small encoder-decoder language model (optionally jointly with
//! a strategy classifier), training a prefix-level future discriminator, and
//! decoding responses whose next-token distributions are reweighted towards
//! a target strategy. Automatic metrics close the loop.
//!
//! Trainable models are generic over the [`Scalar`] type; the aliases below
//! fix the two supported precisions.

pub mod checkpoint;
pub mod commonsense;
pub mod corpus;
pub mod decoding;
pub mod dist;
pub mod error;
pub mod eval;
pub mod lm;
pub mod nn;
pub mod scalar;
pub mod seed;
pub mod strategy;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Language model in double precision (training, gradient checks, CLI).
pub type Lm = lm::Seq2Seq<f64>;
/// Language model in single precision.
pub type LmF32 = lm::Seq2Seq<f32>;
pub type Discriminator = strategy::DiscriminatorModel<f64>;
pub type DiscriminatorF32 = strategy::DiscriminatorModel<f32>;
pub type Classifier = strategy::ExternalClassifier<f64>;
pub type ClassifierF32 = strategy::ExternalClassifier<f32>;
