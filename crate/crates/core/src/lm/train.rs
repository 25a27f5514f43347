use serde::{Deserialize, Serialize};

use super::{Objective, Seq2Seq};
use crate::corpus::TrainingExample;
use crate::error::{Error, Result};
use crate::nn::{fit, Schedule};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Weight of the strategy loss in joint training.
    pub alpha: f64,
    #[serde(flatten)]
    pub schedule: Schedule,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            alpha: 1.0,
            schedule: Schedule::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    GenerationOnly,
    Joint,
}

/// Mean per-example losses over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub total: f64,
    pub lm: f64,
    pub strategy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedLm<S> {
    pub model: Seq2Seq<S>,
    pub trace: Vec<EpochLoss>,
}

pub fn train_lm<S: Scalar>(
    model: Seq2Seq<S>,
    examples: &[TrainingExample],
    config: &TrainingConfig,
    mode: TrainingMode,
) -> Result<TrainedLm<S>> {
    train_lm_observed(model, examples, config, mode, |_, _| {})
}

/// Like [`train_lm`], calling `observer` with each epoch's losses and parameters.
pub fn train_lm_observed<S, F>(
    mut model: Seq2Seq<S>,
    examples: &[TrainingExample],
    config: &TrainingConfig,
    mode: TrainingMode,
    mut observer: F,
) -> Result<TrainedLm<S>>
where
    S: Scalar,
    F: FnMut(&EpochLoss, &Seq2Seq<S>),
{
    config.validate()?;
    let objective = match mode {
        TrainingMode::GenerationOnly => Objective::Generation,
        TrainingMode::Joint => Objective::Joint {
            alpha: config.alpha,
        },
    };
    let mut trace = Vec::with_capacity(config.schedule.epochs);
    fit(
        &mut model,
        examples,
        &config.schedule,
        |m: &Seq2Seq<S>, e: &TrainingExample| {
            let (parts, grad) = m.loss_and_gradient(e, objective)?;
            Ok((vec![parts.total, parts.lm, parts.strategy], grad))
        },
        |epoch, means, m| {
            let loss = EpochLoss {
                epoch,
                total: means[0],
                lm: means[1],
                strategy: means[2],
            };
            observer(&loss, m);
            trace.push(loss);
        },
    )?;
    Ok(TrainedLm { model, trace })
}
