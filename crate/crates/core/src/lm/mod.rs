//! Small trainable encoder-decoder language model conditioned on a strategy
//! marker, with a dense strategy head on the encoder's CLS position.
//!
//! Architecture:
//! - shared token embedding `E` (vocab x embedding_dim), used for encoder
//!   inputs, decoder inputs and, transposed, for the output layer;
//! - bidirectional LSTM encoder; position `t` is `[fwd_t; bwd_t]`;
//! - decoder LSTM whose initial hidden states are
//!   `tanh(bridge([fwd_last; bwd_first]))`, cell states start at zero;
//! - next-token logits `E * (W_out h_t + b_out) + b_vocab`;
//! - strategy logits `W_s * cls + b_s` where `cls` is position 0.

mod grad;
mod train;

pub use grad::{LossParts, Objective};
pub use train::{train_lm, train_lm_observed, EpochLoss, TrainedLm, TrainingConfig, TrainingMode};

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenSequence, CLS};
use crate::dist::{Categorical, NextTokenDistribution, StrategyDistribution};
use crate::error::{Error, Result};
use crate::nn::{add_into, Dense, Embedding, LstmStack, LstmState, Matrix, Parameters};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub encoder_depth: usize,
    pub decoder_depth: usize,
    pub strategy_count: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("embedding_dim", self.embedding_dim),
            ("hidden_dim", self.hidden_dim),
            ("encoder_depth", self.encoder_depth),
            ("decoder_depth", self.decoder_depth),
            ("strategy_count", self.strategy_count),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seq2Seq<S> {
    config: ModelConfig,
    pub(crate) embedding: Embedding<S>,
    pub(crate) encoder_fwd: LstmStack<S>,
    pub(crate) encoder_bwd: LstmStack<S>,
    pub(crate) bridge: Dense<S>,
    pub(crate) decoder: LstmStack<S>,
    pub(crate) output: Dense<S>,
    pub(crate) vocab_bias: Matrix<S>,
    pub(crate) strategy_head: Dense<S>,
}

/// Encoder output for one input sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedContext<S> {
    positions: Vec<Vec<S>>,
    summary: Vec<S>,
}

impl<S: Scalar> EncodedContext<S> {
    /// Hidden vector per input position.
    pub fn positions(&self) -> &[Vec<S>] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Hidden vector at the CLS position.
    pub fn cls_vector(&self) -> &[S] {
        &self.positions[0]
    }

    /// `[fwd_last; bwd_first]`, the input of the decoder bridge.
    pub fn summary(&self) -> &[S] {
        &self.summary
    }
}

/// Decoder recurrent state after consuming a prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState<S> {
    layers: Vec<LstmState<S>>,
}

impl<S: Scalar> Seq2Seq<S> {
    /// Model with every parameter at zero.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (v, d, h) = (config.vocab_size, config.embedding_dim, config.hidden_dim);
        Ok(Seq2Seq {
            embedding: Embedding::new(v, d),
            encoder_fwd: LstmStack::new(d, h, config.encoder_depth),
            encoder_bwd: LstmStack::new(d, h, config.encoder_depth),
            bridge: Dense::new(2 * h, config.decoder_depth * h),
            decoder: LstmStack::new(d, h, config.decoder_depth),
            output: Dense::new(h, d),
            vocab_bias: Matrix::zeros(v, 1),
            strategy_head: Dense::new(2 * h, config.strategy_count),
            config,
        })
    }

    /// Model initialized uniformly in `[-0.08, 0.08]` from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let seed = config.seed;
        let mut m = Self::zeros(config)?;
        m.init_uniform(seed);
        Ok(m)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Zeroes the output projection and vocabulary bias.
    pub fn zero_output_layer(&mut self) {
        self.output.weight.fill_zero();
        self.output.bias.fill_zero();
        self.vocab_bias.fill_zero();
    }

    pub fn zero_strategy_head(&mut self) {
        self.strategy_head.weight.fill_zero();
        self.strategy_head.bias.fill_zero();
    }

    pub fn strategy_head_mut(&mut self) -> &mut Dense<S> {
        &mut self.strategy_head
    }

    pub(crate) fn check_tokens(&self, ids: &[u32]) -> Result<()> {
        let vocab_size = self.config.vocab_size;
        match ids.iter().find(|&&id| id as usize >= vocab_size) {
            Some(&id) => Err(Error::InvalidToken { id, vocab_size }),
            None => Ok(()),
        }
    }

    pub(crate) fn check_input(&self, input: &TokenSequence) -> Result<()> {
        if input.ids().first() != Some(&CLS) {
            return Err(Error::InvalidInput(
                "encoder input must be non-empty and start with CLS".into(),
            ));
        }
        self.check_tokens(input.ids())
    }

    pub(crate) fn embed_all(&self, ids: &[u32]) -> Vec<Vec<S>> {
        ids.iter().map(|&id| self.embedding.lookup(id)).collect()
    }

    pub fn encode(&self, input: &TokenSequence) -> Result<EncodedContext<S>> {
        self.check_input(input)?;
        Ok(grad::encode_traced(self, input.ids()).0)
    }

    pub fn predict_strategy(&self, ctx: &EncodedContext<S>) -> StrategyDistribution<S> {
        Categorical::from_logits(&self.strategy_head.forward(ctx.cls_vector()))
    }

    pub(crate) fn initial_hidden(&self, summary: &[S]) -> Vec<S> {
        self.bridge
            .forward(summary)
            .into_iter()
            .map(|a| a.tanh())
            .collect()
    }

    pub fn decoder_start(&self, ctx: &EncodedContext<S>) -> DecoderState<S> {
        let h = self.config.hidden_dim;
        let init = self.initial_hidden(&ctx.summary);
        DecoderState {
            layers: init
                .chunks(h)
                .map(|chunk| LstmState {
                    h: chunk.to_vec(),
                    c: vec![S::zero(); h],
                })
                .collect(),
        }
    }

    pub(crate) fn vocab_logits(&self, top_hidden: &[S]) -> (Vec<S>, Vec<S>) {
        let projected = self.output.forward(top_hidden);
        let mut logits = self.embedding.table.matvec(&projected);
        add_into(&mut logits, self.vocab_bias.as_slice());
        (projected, logits)
    }

    /// Feeds one token and returns the distribution over the next one.
    pub fn decoder_step(
        &self,
        state: &DecoderState<S>,
        token: u32,
    ) -> Result<(DecoderState<S>, NextTokenDistribution<S>)> {
        self.check_tokens(&[token])?;
        let layers = self
            .decoder
            .step(&self.embedding.lookup(token), &state.layers);
        let (_, logits) = self.vocab_logits(&layers.last().expect("decoder depth >= 1").h);
        Ok((DecoderState { layers }, Categorical::from_logits(&logits)))
    }

    /// `p(x_t | x_1..x_{t-1}, s)` where the prefix starts with the strategy marker.
    pub fn next_token_distribution(
        &self,
        ctx: &EncodedContext<S>,
        prefix: &TokenSequence,
    ) -> Result<NextTokenDistribution<S>> {
        if prefix.is_empty() {
            return Err(Error::InvalidInput(
                "decoder prefix must start with a strategy marker".into(),
            ));
        }
        let mut state = self.decoder_start(ctx);
        let mut dist = None;
        for &id in prefix.ids() {
            let (next, d) = self.decoder_step(&state, id)?;
            state = next;
            dist = Some(d);
        }
        Ok(dist.expect("prefix is non-empty"))
    }
}

impl<S: Scalar> Parameters<S> for Seq2Seq<S> {
    fn tensors(&self) -> Vec<(String, &Matrix<S>)> {
        let mut out = vec![("embedding".to_string(), &self.embedding.table)];
        self.encoder_fwd.push_tensors("encoder_fwd", &mut out);
        self.encoder_bwd.push_tensors("encoder_bwd", &mut out);
        self.bridge.push_tensors("bridge", &mut out);
        self.decoder.push_tensors("decoder", &mut out);
        self.output.push_tensors("output", &mut out);
        out.push(("vocab_bias".to_string(), &self.vocab_bias));
        self.strategy_head.push_tensors("strategy_head", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<S>> {
        let mut out = vec![&mut self.embedding.table];
        self.encoder_fwd.push_tensors_mut(&mut out);
        self.encoder_bwd.push_tensors_mut(&mut out);
        self.bridge.push_tensors_mut(&mut out);
        self.decoder.push_tensors_mut(&mut out);
        self.output.push_tensors_mut(&mut out);
        out.push(&mut self.vocab_bias);
        self.strategy_head.push_tensors_mut(&mut out);
        out
    }
}
