use std::fmt::Write as _;

use clap::ValueEnum;
use steerdial_core::checkpoint::{Checkpoint, Checkpointable};
use steerdial_core::corpus::{TrainingExample, Vocabulary};
use steerdial_core::lm::{train_lm, ModelConfig, TrainingMode};
use steerdial_core::nn::Schedule;
use steerdial_core::seed::component_seed;
use steerdial_core::strategy::{
    classifier_data, discriminator_data, predict_strategy, train_discriminator,
    train_external_classifier, RecurrentConfig, StrategySource,
};
use steerdial_core::{Classifier, Discriminator, Lm};

use crate::artifacts;
use crate::config::{RecurrentShape, RunConfig};
use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Target {
    Lm,
    LmJoint,
    Classifier,
    Discriminator,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Lm => "lm",
            Target::LmJoint => "lm_joint",
            Target::Classifier => "classifier",
            Target::Discriminator => "discriminator",
        }
    }
}

/// Both language model targets share initialization and shuffling, so a
/// joint run with zero strategy weight retraces the generation-only run.
pub fn lm_config(cfg: &RunConfig, vocab: &Vocabulary) -> ModelConfig {
    ModelConfig {
        vocab_size: vocab.len(),
        embedding_dim: cfg.lm.embedding_dim,
        hidden_dim: cfg.lm.hidden_dim,
        encoder_depth: cfg.lm.encoder_depth,
        decoder_depth: cfg.lm.decoder_depth,
        strategy_count: cfg.strategies.len(),
        seed: component_seed(cfg.seed, "lm.init"),
    }
}

fn recurrent_config(
    cfg: &RunConfig,
    vocab: &Vocabulary,
    shape: &RecurrentShape,
    name: &str,
) -> RecurrentConfig {
    RecurrentConfig {
        vocab_size: vocab.len(),
        embedding_dim: shape.embedding_dim,
        hidden_dim: shape.hidden_dim,
        depth: shape.depth,
        strategy_count: cfg.strategies.len(),
        seed: component_seed(cfg.seed, &format!("{name}.init")),
    }
}

fn seeded(schedule: &Schedule, cfg: &RunConfig, name: &str) -> Schedule {
    Schedule {
        seed: component_seed(cfg.seed, &format!("{name}.shuffle")),
        ..schedule.clone()
    }
}

fn save<M: Checkpointable<f64>>(
    cfg: &RunConfig,
    target: Target,
    model: M,
    vocab: &Vocabulary,
    trace: &str,
) -> Result<String, Failure> {
    let path = cfg.out(&format!("{}.ckpt", target.name()));
    Checkpoint::new(model, vocab.to_file(&cfg.strategies)).save::<f64>(&path)?;
    artifacts::write_bytes(
        &cfg.out(&format!("{}_trace.tsv", target.name())),
        trace.as_bytes(),
    )?;
    Ok(path.display().to_string())
}

fn joint_accuracy(model: &Lm, examples: &[TrainingExample]) -> Result<f64, Failure> {
    let source = StrategySource::JointHead(model);
    let mut correct = 0;
    for e in examples {
        if predict_strategy(&e.input, &source, None)? == e.gold_strategy {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len().max(1) as f64)
}

pub fn run(cfg: &RunConfig, target: Target) -> Result<(), Failure> {
    let vocab = artifacts::load_vocabulary(cfg)?;
    let train = artifacts::load_examples(cfg, "train", &vocab)?;
    let dev = artifacts::load_examples(cfg, "dev", &vocab)?;
    if train.is_empty() {
        return Err(Failure::data("the prepared training split has no examples"));
    }

    let name = target.name();
    let summary = match target {
        Target::Lm | Target::LmJoint => {
            let mode = if target == Target::Lm {
                TrainingMode::GenerationOnly
            } else {
                TrainingMode::Joint
            };
            let mut training = cfg.training.lm.clone();
            training.schedule = seeded(&training.schedule, cfg, "lm");
            let trained = train_lm(Lm::new(lm_config(cfg, &vocab))?, &train, &training, mode)?;
            let mut trace = String::from("epoch\ttotal\tlm\tstrategy\n");
            for e in &trained.trace {
                writeln!(
                    trace,
                    "{}\t{}\t{}\t{}",
                    e.epoch + 1,
                    e.total,
                    e.lm,
                    e.strategy
                )
                .expect("string write");
            }
            let last = trained.trace.last().map_or(f64::NAN, |e| e.total);
            let extra = if target == Target::LmJoint && !dev.is_empty() {
                format!(
                    ", held-out strategy accuracy {:.4}",
                    joint_accuracy(&trained.model, &dev)?
                )
            } else {
                String::new()
            };
            let path = save(cfg, target, trained.model, &vocab, &trace)?;
            format!("final loss {last:.4}{extra} -> {path}")
        }
        Target::Classifier | Target::Discriminator => {
            let (data, held_out, shape, schedule) = if target == Target::Classifier {
                (
                    classifier_data(&train),
                    classifier_data(&dev),
                    &cfg.classifier,
                    &cfg.training.classifier,
                )
            } else {
                (
                    discriminator_data(&train, &vocab),
                    discriminator_data(&dev, &vocab),
                    &cfg.discriminator,
                    &cfg.training.discriminator,
                )
            };
            let model_cfg = recurrent_config(cfg, &vocab, shape, name);
            let schedule = seeded(schedule, cfg, name);
            let (trace_losses, accuracy, path) = if target == Target::Classifier {
                let t = train_external_classifier(
                    Classifier::new(model_cfg)?,
                    &data,
                    &schedule,
                    &held_out,
                )?;
                let trace = loss_trace(&t.trace);
                (
                    t.trace,
                    t.held_out_accuracy,
                    save(cfg, target, t.model, &vocab, &trace)?,
                )
            } else {
                let t = train_discriminator(
                    Discriminator::new(model_cfg)?,
                    &data,
                    &schedule,
                    &held_out,
                )?;
                let trace = loss_trace(&t.trace);
                (
                    t.trace,
                    t.held_out_accuracy,
                    save(cfg, target, t.model, &vocab, &trace)?,
                )
            };
            let last = trace_losses.last().copied().unwrap_or(f64::NAN);
            match accuracy {
                Some(a) => format!("final loss {last:.4}, held-out accuracy {a:.4} -> {path}"),
                None => format!("final loss {last:.4} -> {path}"),
            }
        }
    };
    println!("trained {name}: {summary}");
    Ok(())
}

fn loss_trace(losses: &[f64]) -> String {
    let mut out = String::from("epoch\tloss\n");
    for (i, l) in losses.iter().enumerate() {
        writeln!(out, "{}\t{}", i + 1, l).expect("string write");
    }
    out
}
