use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Optimizer, OptimizerKind, Parameters};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minibatch gradient descent settings shared by every trainable model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the per-epoch example shuffle.
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Rescales each averaged batch gradient to at most this L2 norm.
    pub clip_norm: Option<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            learning_rate: 0.5,
            epochs: 20,
            batch_size: 8,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
            clip_norm: Some(5.0),
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config("clip_norm must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Runs `schedule.epochs` epochs of shuffled minibatch descent.
///
/// `step` returns the per-example loss components (the first component is
/// the optimized objective) and the gradient of that objective. Batch
/// gradients are averaged. `on_epoch` sees the epoch index, the mean of each
/// loss component and the parameters at the end of the epoch.
pub fn fit<S, M, E, G, O>(
    model: &mut M,
    examples: &[E],
    schedule: &Schedule,
    mut step: G,
    mut on_epoch: O,
) -> Result<()>
where
    S: Scalar,
    M: Parameters<S> + Clone,
    G: FnMut(&M, &E) -> Result<(Vec<f64>, M)>,
    O: FnMut(usize, &[f64], &M),
{
    schedule.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("no training examples".into()));
    }
    let mut optimizer = Optimizer::new(
        schedule.optimizer,
        schedule.learning_rate,
        model.parameter_count(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..schedule.epochs {
        order.shuffle(&mut rng);
        let mut sums: Vec<f64> = Vec::new();
        for batch in order.chunks(schedule.batch_size) {
            let scale = S::one() / S::of(batch.len() as f64);
            let mut acc = model.clone();
            acc.zero_all();
            for &i in batch {
                let (parts, grad) = step(model, &examples[i])?;
                if sums.is_empty() {
                    sums = vec![0.0; parts.len()];
                }
                for (s, p) in sums.iter_mut().zip(&parts) {
                    *s += p;
                }
                if !parts[0].is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        loss: parts[0],
                    });
                }
                acc.add_scaled(&grad, scale);
            }
            if let Some(limit) = schedule.clip_norm {
                let norm = acc
                    .flatten()
                    .iter()
                    .map(|g| g.as_f64() * g.as_f64())
                    .sum::<f64>()
                    .sqrt();
                if norm > limit {
                    let mut clipped = acc.clone();
                    clipped.zero_all();
                    clipped.add_scaled(&acc, S::of(limit / norm));
                    acc = clipped;
                }
            }
            optimizer.step(model, &acc);
            if !model.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: f64::NAN,
                });
            }
        }
        let means: Vec<f64> = sums.iter().map(|s| s / examples.len() as f64).collect();
        on_epoch(epoch, &means, model);
    }
    Ok(())
}
