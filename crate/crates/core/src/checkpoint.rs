//! Versioned binary container for trained models.
//!
//! Layout (all integers little endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `STRDIAL\0` |
//! | 4     | format version (`u32`) |
//! | 8     | header length `h` (`u64`) |
//! | h     | UTF-8 JSON header: kind, model config, vocabulary, tensor specs |
//! | 8 * n | every parameter as an IEEE-754 `f64`, tensors in header order, row-major |
//!
//! Values round-trip bit-exactly for `f64` models and for `f32` models
//! (widening to `f64` is exact).

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{Vocabulary, VocabularyFile};
use crate::error::{Error, Result};
use crate::lm::{ModelConfig, Seq2Seq};
use crate::nn::{Parameters, TensorSpec};
use crate::scalar::Scalar;
use crate::strategy::{DiscriminatorModel, ExternalClassifier, RecurrentConfig};

pub const MAGIC: &[u8; 8] = b"STRDIAL\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lm,
    Discriminator,
    Classifier,
}

/// A model type that can be stored in a checkpoint.
pub trait Checkpointable<S: Scalar>: Parameters<S> + Sized {
    const KIND: ModelKind;
    type Config: Serialize + DeserializeOwned + Clone;

    fn checkpoint_config(&self) -> &Self::Config;
    fn vocab_size(config: &Self::Config) -> usize;
    fn zeros_from(config: Self::Config) -> Result<Self>;
}

impl<S: Scalar> Checkpointable<S> for Seq2Seq<S> {
    const KIND: ModelKind = ModelKind::Lm;
    type Config = ModelConfig;

    fn checkpoint_config(&self) -> &ModelConfig {
        self.config()
    }

    fn vocab_size(config: &ModelConfig) -> usize {
        config.vocab_size
    }

    fn zeros_from(config: ModelConfig) -> Result<Self> {
        Seq2Seq::zeros(config)
    }
}

impl<S: Scalar> Checkpointable<S> for DiscriminatorModel<S> {
    const KIND: ModelKind = ModelKind::Discriminator;
    type Config = RecurrentConfig;

    fn checkpoint_config(&self) -> &RecurrentConfig {
        self.config()
    }

    fn vocab_size(config: &RecurrentConfig) -> usize {
        config.vocab_size
    }

    fn zeros_from(config: RecurrentConfig) -> Result<Self> {
        DiscriminatorModel::zeros(config)
    }
}

impl<S: Scalar> Checkpointable<S> for ExternalClassifier<S> {
    const KIND: ModelKind = ModelKind::Classifier;
    type Config = RecurrentConfig;

    fn checkpoint_config(&self) -> &RecurrentConfig {
        self.config()
    }

    fn vocab_size(config: &RecurrentConfig) -> usize {
        config.vocab_size
    }

    fn zeros_from(config: RecurrentConfig) -> Result<Self> {
        ExternalClassifier::zeros(config)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header<C> {
    kind: ModelKind,
    config: C,
    vocabulary: VocabularyFile,
    tensors: Vec<TensorSpec>,
}

/// A model together with the vocabulary it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<M> {
    pub model: M,
    pub vocabulary: VocabularyFile,
}

impl<M> Checkpoint<M> {
    pub fn new(model: M, vocabulary: VocabularyFile) -> Self {
        Checkpoint { model, vocabulary }
    }

    pub fn to_bytes<S: Scalar>(&self) -> Vec<u8>
    where
        M: Checkpointable<S>,
    {
        let header = Header {
            kind: M::KIND,
            config: self.model.checkpoint_config().clone(),
            vocabulary: self.vocabulary.clone(),
            tensors: self.model.tensor_specs(),
        };
        let header = serde_json::to_vec(&header).expect("checkpoint header serializes");
        let params = self.model.flatten();
        let mut out = Vec::with_capacity(20 + header.len() + 8 * params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for p in params {
            out.extend_from_slice(&p.as_f64().to_le_bytes());
        }
        out
    }

    pub fn from_bytes<S: Scalar>(bytes: &[u8]) -> Result<Self>
    where
        M: Checkpointable<S>,
    {
        let truncated = || Error::Format("checkpoint is truncated".into());
        if bytes.len() < 20 {
            return Err(truncated());
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Format("not a checkpoint file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(20..).ok_or_else(truncated)?;
        let header_bytes = body.get(..header_len).ok_or_else(truncated)?;
        let header: Header<M::Config> = serde_json::from_slice(header_bytes)
            .map_err(|e| Error::Format(format!("bad checkpoint header: {e}")))?;
        if header.kind != M::KIND {
            return Err(Error::Format(format!(
                "checkpoint holds a {:?} model, expected {:?}",
                header.kind,
                M::KIND
            )));
        }
        let mut model = M::zeros_from(header.config)?;
        if model.tensor_specs() != header.tensors {
            return Err(Error::Format(
                "tensor layout does not match the model configuration".into(),
            ));
        }
        let data = &body[header_len..];
        if data.len() != 8 * model.parameter_count() {
            return Err(truncated());
        }
        let flat: Vec<S> = data
            .chunks_exact(8)
            .map(|c| S::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        model.assign_flat(&flat);
        Ok(Checkpoint {
            model,
            vocabulary: header.vocabulary,
        })
    }

    pub fn save<S: Scalar>(&self, path: &Path) -> Result<()>
    where
        M: Checkpointable<S>,
    {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load<S: Scalar>(path: &Path) -> Result<Self>
    where
        M: Checkpointable<S>,
    {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads and checks that the checkpoint matches the runtime vocabulary.
    pub fn load_for<S: Scalar>(path: &Path, runtime: &Vocabulary) -> Result<Self>
    where
        M: Checkpointable<S>,
    {
        let ckpt = Self::load(path)?;
        let size = M::vocab_size(ckpt.model.checkpoint_config());
        if size != runtime.len() {
            return Err(Error::ConfigMismatch(format!(
                "{}: checkpoint vocabulary has {size} entries, runtime vocabulary has {}",
                path.display(),
                runtime.len()
            )));
        }
        if ckpt.vocabulary.tokens != runtime.tokens() {
            return Err(Error::ConfigMismatch(format!(
                "{}: checkpoint vocabulary differs from the runtime vocabulary",
                path.display()
            )));
        }
        Ok(ckpt)
    }
}

pub fn save_checkpoint<S: Scalar, M: Checkpointable<S>>(
    ckpt: &Checkpoint<M>,
    path: &Path,
) -> Result<()> {
    ckpt.save(path)
}

pub fn load_checkpoint<S: Scalar, M: Checkpointable<S>>(path: &Path) -> Result<Checkpoint<M>> {
    Checkpoint::load(path)
}
