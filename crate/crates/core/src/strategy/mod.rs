//! Strategy prediction (joint head, standalone classifier, oracle) and the
//! prefix-level future discriminator used for controlled decoding.

mod recurrent;

pub use recurrent::{LossPositions, PrefixState, RecurrentClassifier, RecurrentConfig};

use serde::{Deserialize, Serialize};

use crate::corpus::{StrategyLabel, TokenSequence, TrainingExample, Vocabulary, EOS};
use crate::dist::StrategyDistribution;
use crate::error::{Error, Result};
use crate::lm::{EncodedContext, Seq2Seq};
use crate::nn::{fit, Matrix, Parameters, Schedule};
use crate::scalar::Scalar;

/// A token sequence with its gold strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSequence {
    pub tokens: TokenSequence,
    pub label: StrategyLabel,
}

macro_rules! recurrent_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<S>(RecurrentClassifier<S>);

        impl<S: Scalar> $name<S> {
            pub fn new(config: RecurrentConfig) -> Result<Self> {
                RecurrentClassifier::new(config).map($name)
            }

            pub fn zeros(config: RecurrentConfig) -> Result<Self> {
                RecurrentClassifier::zeros(config).map($name)
            }

            pub fn from_inner(inner: RecurrentClassifier<S>) -> Self {
                $name(inner)
            }

            pub fn inner(&self) -> &RecurrentClassifier<S> {
                &self.0
            }

            pub fn inner_mut(&mut self) -> &mut RecurrentClassifier<S> {
                &mut self.0
            }

            pub fn config(&self) -> &RecurrentConfig {
                self.0.config()
            }
        }

        impl<S: Scalar> Parameters<S> for $name<S> {
            fn tensors(&self) -> Vec<(String, &Matrix<S>)> {
                self.0.tensors()
            }

            fn tensors_mut(&mut self) -> Vec<&mut Matrix<S>> {
                self.0.tensors_mut()
            }
        }
    };
}

recurrent_newtype!(
    /// Future discriminator: classifies every prefix of a response.
    DiscriminatorModel
);

recurrent_newtype!(
    /// History classifier trained separately from the language model.
    ExternalClassifier
);

impl<S: Scalar> ExternalClassifier<S> {
    pub fn predict(&self, history: &TokenSequence) -> Result<StrategyDistribution<S>> {
        self.0.classify(history.ids())
    }
}

/// `p(s | x_1..x_t)` for every `t`; the prefix must not contain the strategy marker.
pub fn disc_step_distributions<S: Scalar>(
    prefix: &TokenSequence,
    model: &DiscriminatorModel<S>,
) -> Result<Vec<StrategyDistribution<S>>> {
    model.0.step_distributions(prefix.ids())
}

/// `-sum_t ln p(gold | x_1..x_t)` over all prefixes of the utterance.
pub fn disc_loss<S: Scalar>(
    utterance: &TokenSequence,
    gold: StrategyLabel,
    model: &DiscriminatorModel<S>,
) -> Result<f64> {
    model
        .0
        .loss(utterance.ids(), gold, LossPositions::EveryPrefix)
}

/// Softmax of the joint head applied to the CLS vector.
pub fn predict_strategy_joint<S: Scalar>(
    model: &Seq2Seq<S>,
    ctx: &EncodedContext<S>,
) -> StrategyDistribution<S> {
    model.predict_strategy(ctx)
}

/// Where the conditioning strategy comes from.
#[derive(Debug, Clone, Copy)]
pub enum StrategySource<'a, S> {
    JointHead(&'a Seq2Seq<S>),
    ExternalClassifier(&'a ExternalClassifier<S>),
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategySourceKind {
    Joint,
    Classifier,
    Oracle,
}

impl<S> StrategySource<'_, S> {
    pub fn kind(&self) -> StrategySourceKind {
        match self {
            StrategySource::JointHead(_) => StrategySourceKind::Joint,
            StrategySource::ExternalClassifier(_) => StrategySourceKind::Classifier,
            StrategySource::Oracle => StrategySourceKind::Oracle,
        }
    }
}

/// Argmax strategy of the chosen source (lowest index on ties). `gold` is
/// only consulted by the oracle.
pub fn predict_strategy<S: Scalar>(
    history: &TokenSequence,
    source: &StrategySource<'_, S>,
    gold: Option<StrategyLabel>,
) -> Result<StrategyLabel> {
    let dist = match source {
        StrategySource::Oracle => return gold.ok_or(Error::MissingGold),
        StrategySource::JointHead(lm) => lm.predict_strategy(&lm.encode(history)?),
        StrategySource::ExternalClassifier(c) => c.predict(history)?,
    };
    Ok(StrategyLabel(dist.argmax()))
}

/// A trained model with its per-epoch mean loss.
#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    pub trace: Vec<f64>,
    /// Accuracy of the full-sequence prediction on the held-out set, if one was given.
    pub held_out_accuracy: Option<f64>,
}

/// Fraction of sequences whose full-sequence argmax equals the gold label.
pub fn sequence_accuracy<S: Scalar>(
    model: &RecurrentClassifier<S>,
    data: &[LabeledSequence],
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("no sequences to score".into()));
    }
    let mut correct = 0usize;
    for item in data {
        if model.classify(item.tokens.ids())?.argmax() == item.label.index() {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

fn train_recurrent<S: Scalar>(
    mut model: RecurrentClassifier<S>,
    data: &[LabeledSequence],
    schedule: &Schedule,
    held_out: &[LabeledSequence],
    positions: LossPositions,
) -> Result<Trained<RecurrentClassifier<S>>> {
    let mut trace = Vec::with_capacity(schedule.epochs);
    fit(
        &mut model,
        data,
        schedule,
        |m: &RecurrentClassifier<S>, item: &LabeledSequence| {
            let (loss, grad) = m.loss_and_gradient(item.tokens.ids(), item.label, positions)?;
            Ok((vec![loss], grad))
        },
        |_, means, _| trace.push(means[0]),
    )?;
    let held_out_accuracy = if held_out.is_empty() {
        None
    } else {
        Some(sequence_accuracy(&model, held_out)?)
    };
    Ok(Trained {
        model,
        trace,
        held_out_accuracy,
    })
}

/// Minimizes the mean prefix loss over `data`.
pub fn train_discriminator<S: Scalar>(
    init: DiscriminatorModel<S>,
    data: &[LabeledSequence],
    schedule: &Schedule,
    held_out: &[LabeledSequence],
) -> Result<Trained<DiscriminatorModel<S>>> {
    let t = train_recurrent(init.0, data, schedule, held_out, LossPositions::EveryPrefix)?;
    Ok(Trained {
        model: DiscriminatorModel(t.model),
        trace: t.trace,
        held_out_accuracy: t.held_out_accuracy,
    })
}

/// Minimizes full-history cross-entropy; never touches language model parameters.
pub fn train_external_classifier<S: Scalar>(
    init: ExternalClassifier<S>,
    data: &[LabeledSequence],
    schedule: &Schedule,
    held_out: &[LabeledSequence],
) -> Result<Trained<ExternalClassifier<S>>> {
    let t = train_recurrent(init.0, data, schedule, held_out, LossPositions::Last)?;
    Ok(Trained {
        model: ExternalClassifier(t.model),
        trace: t.trace,
        held_out_accuracy: t.held_out_accuracy,
    })
}

/// Response tokens of each example with markers and EOS removed; empty
/// responses are skipped.
pub fn discriminator_data(
    examples: &[TrainingExample],
    vocab: &Vocabulary,
) -> Vec<LabeledSequence> {
    examples
        .iter()
        .filter_map(|e| {
            let ids: Vec<u32> = e
                .target
                .ids()
                .iter()
                .copied()
                .filter(|&id| id != EOS && !vocab.is_marker(id))
                .collect();
            (!ids.is_empty()).then(|| LabeledSequence {
                tokens: ids.into(),
                label: e.gold_strategy,
            })
        })
        .collect()
}

/// Model input (history) of each example with its gold strategy.
pub fn classifier_data(examples: &[TrainingExample]) -> Vec<LabeledSequence> {
    examples
        .iter()
        .map(|e| LabeledSequence {
            tokens: e.input.clone(),
            label: e.gold_strategy,
        })
        .collect()
}
