use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    /// Plain momentum-free gradient descent.
    #[default]
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

/// Optimizer with its running state over a flattened parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer<S> {
    kind: OptimizerKind,
    learning_rate: S,
    first_moment: Vec<S>,
    second_moment: Vec<S>,
    steps: i32,
}

impl<S: Scalar> Optimizer<S> {
    pub fn new(kind: OptimizerKind, learning_rate: f64, parameter_count: usize) -> Self {
        let moments = match kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Adam { .. } => parameter_count,
        };
        Optimizer {
            kind,
            learning_rate: S::of(learning_rate),
            first_moment: vec![S::zero(); moments],
            second_moment: vec![S::zero(); moments],
            steps: 0,
        }
    }

    pub fn step<P: Parameters<S>>(&mut self, model: &mut P, grad: &P) {
        self.steps += 1;
        let g = grad.flatten();
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = self.learning_rate;
                let mut offset = 0;
                for m in model.tensors_mut() {
                    for p in m.as_mut_slice() {
                        *p -= lr * g[offset];
                        offset += 1;
                    }
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let (b1, b2, eps) = (S::of(beta1), S::of(beta2), S::of(epsilon));
                let one = S::one();
                let bias1 = one - b1.powi(self.steps);
                let bias2 = one - b2.powi(self.steps);
                let mut offset = 0;
                for m in model.tensors_mut() {
                    for p in m.as_mut_slice() {
                        let gi = g[offset];
                        let m1 = &mut self.first_moment[offset];
                        *m1 = b1 * *m1 + (one - b1) * gi;
                        let m2 = &mut self.second_moment[offset];
                        *m2 = b2 * *m2 + (one - b2) * gi * gi;
                        let m_hat = *m1 / bias1;
                        let v_hat = *m2 / bias2;
                        *p -= self.learning_rate * m_hat / (v_hat.sqrt() + eps);
                        offset += 1;
                    }
                }
            }
        }
    }
}
