use serde::{Deserialize, Serialize};

use crate::corpus::StrategyLabel;
use crate::dist::{Categorical, StrategyDistribution};
use crate::error::{Error, Result};
use crate::nn::{log_softmax, Dense, Embedding, LstmStack, LstmState, Matrix, Parameters};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrentConfig {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub depth: usize,
    pub strategy_count: usize,
    pub seed: u64,
}

impl RecurrentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("vocab_size", self.vocab_size),
            ("embedding_dim", self.embedding_dim),
            ("hidden_dim", self.hidden_dim),
            ("depth", self.depth),
            ("strategy_count", self.strategy_count),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// Which positions contribute to a sequence's classification loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossPositions {
    /// Every prefix `x_1..x_t`, summed.
    EveryPrefix,
    /// Only the full sequence.
    Last,
}

/// LSTM over tokens with a dense strategy head applied at every position.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentClassifier<S> {
    config: RecurrentConfig,
    pub(crate) embedding: Embedding<S>,
    pub(crate) lstm: LstmStack<S>,
    pub(crate) head: Dense<S>,
}

/// Recurrent state after a prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixState<S> {
    layers: Vec<LstmState<S>>,
}

impl<S: Scalar> RecurrentClassifier<S> {
    pub fn zeros(config: RecurrentConfig) -> Result<Self> {
        config.validate()?;
        Ok(RecurrentClassifier {
            embedding: Embedding::new(config.vocab_size, config.embedding_dim),
            lstm: LstmStack::new(config.embedding_dim, config.hidden_dim, config.depth),
            head: Dense::new(config.hidden_dim, config.strategy_count),
            config,
        })
    }

    pub fn new(config: RecurrentConfig) -> Result<Self> {
        let seed = config.seed;
        let mut m = Self::zeros(config)?;
        m.init_uniform(seed);
        Ok(m)
    }

    pub fn config(&self) -> &RecurrentConfig {
        &self.config
    }

    pub fn head_mut(&mut self) -> &mut Dense<S> {
        &mut self.head
    }

    fn check(&self, ids: &[u32]) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::InvalidInput("classifier input is empty".into()));
        }
        let vocab_size = self.config.vocab_size;
        match ids.iter().find(|&&id| id as usize >= vocab_size) {
            Some(&id) => Err(Error::InvalidToken { id, vocab_size }),
            None => Ok(()),
        }
    }

    pub fn start(&self) -> PrefixState<S> {
        PrefixState {
            layers: self.lstm.zero_states(),
        }
    }

    /// Consumes one token; returns the new state and `p(s | prefix + token)`.
    pub fn advance(
        &self,
        state: &PrefixState<S>,
        token: u32,
    ) -> Result<(PrefixState<S>, StrategyDistribution<S>)> {
        self.check(&[token])?;
        let layers = self.lstm.step(&self.embedding.lookup(token), &state.layers);
        let dist =
            Categorical::from_logits(&self.head.forward(&layers.last().expect("depth >= 1").h));
        Ok((PrefixState { layers }, dist))
    }

    /// One distribution per position, each depending on `ids[..=t]` only.
    pub fn step_distributions(&self, ids: &[u32]) -> Result<Vec<StrategyDistribution<S>>> {
        self.check(ids)?;
        let inputs: Vec<Vec<S>> = ids.iter().map(|&id| self.embedding.lookup(id)).collect();
        let (tops, _, _) = self.lstm.forward(&inputs, &self.lstm.zero_states());
        Ok(tops
            .iter()
            .map(|h| Categorical::from_logits(&self.head.forward(h)))
            .collect())
    }

    /// Distribution after the full sequence.
    pub fn classify(&self, ids: &[u32]) -> Result<StrategyDistribution<S>> {
        Ok(self
            .step_distributions(ids)?
            .pop()
            .expect("non-empty input"))
    }

    pub fn loss(&self, ids: &[u32], gold: StrategyLabel, positions: LossPositions) -> Result<f64> {
        Ok(self.run(ids, gold, positions, false)?.0)
    }

    pub fn loss_and_gradient(
        &self,
        ids: &[u32],
        gold: StrategyLabel,
        positions: LossPositions,
    ) -> Result<(f64, Self)> {
        let (loss, grad) = self.run(ids, gold, positions, true)?;
        Ok((loss, grad.expect("gradient requested")))
    }

    fn run(
        &self,
        ids: &[u32],
        gold: StrategyLabel,
        positions: LossPositions,
        want_grad: bool,
    ) -> Result<(f64, Option<Self>)> {
        self.check(ids)?;
        let gold = gold.index();
        if gold >= self.config.strategy_count {
            return Err(Error::InvalidInput("gold strategy out of range".into()));
        }
        let n = ids.len();
        let inputs: Vec<Vec<S>> = ids.iter().map(|&id| self.embedding.lookup(id)).collect();
        let (tops, _, cache) = self.lstm.forward(&inputs, &self.lstm.zero_states());
        let counted = match positions {
            LossPositions::EveryPrefix => 0..n,
            LossPositions::Last => n - 1..n,
        };

        let mut grad = want_grad.then(|| {
            let mut g = self.clone();
            g.zero_all();
            g
        });
        let mut d_tops = vec![vec![S::zero(); self.config.hidden_dim]; n];
        let mut loss = S::zero();
        for t in counted {
            let lp = log_softmax(&self.head.forward(&tops[t]));
            loss -= lp[gold];
            if let Some(g) = grad.as_mut() {
                let d_logits: Vec<S> = lp
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| {
                        if k == gold {
                            l.exp() - S::one()
                        } else {
                            l.exp()
                        }
                    })
                    .collect();
                d_tops[t] = self.head.backward(&tops[t], &d_logits, &mut g.head);
            }
        }
        let Some(mut g) = grad else {
            return Ok((loss.as_f64(), None));
        };
        let (d_inputs, _) = self.lstm.backward(&cache, &d_tops, None, &mut g.lstm);
        for (&id, d) in ids.iter().zip(&d_inputs) {
            g.embedding.accumulate(id, d);
        }
        Ok((loss.as_f64(), Some(g)))
    }
}

impl<S: Scalar> Parameters<S> for RecurrentClassifier<S> {
    fn tensors(&self) -> Vec<(String, &Matrix<S>)> {
        let mut out = vec![("embedding".to_string(), &self.embedding.table)];
        self.lstm.push_tensors("lstm", &mut out);
        self.head.push_tensors("head", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<S>> {
        let mut out = vec![&mut self.embedding.table];
        self.lstm.push_tensors_mut(&mut out);
        self.head.push_tensors_mut(&mut out);
        out
    }
}
