//! Normalized categorical distributions.

use crate::nn::{argmax, softmax};
use crate::scalar::Scalar;

/// Floor applied to probabilities before taking an explicit logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Probability vector over a finite index set (vocabulary or strategy set).
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical<S> {
    probs: Vec<S>,
}

pub type NextTokenDistribution<S> = Categorical<S>;
pub type StrategyDistribution<S> = Categorical<S>;

impl<S: Scalar> Categorical<S> {
    pub fn from_logits(logits: &[S]) -> Self {
        Categorical {
            probs: softmax(logits),
        }
    }

    /// Wraps probabilities that are already normalized.
    pub fn from_probs(probs: Vec<S>) -> Self {
        Categorical { probs }
    }

    pub fn uniform(n: usize) -> Self {
        Categorical {
            probs: vec![S::one() / S::of(n as f64); n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> S {
        self.probs[i]
    }

    /// `ln p(i)` with the probability clamped at [`PROB_FLOOR`].
    pub fn log_prob(&self, i: usize) -> S {
        self.probs[i].max(S::of(PROB_FLOOR)).ln()
    }

    /// Most probable index, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn sum(&self) -> S {
        self.probs.iter().copied().sum()
    }

    /// Non-negative entries summing to one within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs.iter().all(|&p| p >= S::zero() && p.is_finite())
            && (self.sum().as_f64() - 1.0).abs() <= tol
    }

    pub fn into_probs(self) -> Vec<S> {
        self.probs
    }
}
