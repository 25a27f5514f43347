use steerdial_core::corpus::{load_dataset, Vocabulary};
use steerdial_core::decoding::{
    batch_generate, write_generations, DatasetKnowledge, DecodingConfig,
};
use steerdial_core::seed::component_seed;
use steerdial_core::strategy::{StrategySource, StrategySourceKind};
use steerdial_core::{Classifier, Discriminator, Lm};

use crate::artifacts;
use crate::config::{LmTarget, RunConfig};
use crate::failure::Failure;

pub fn source_name(kind: StrategySourceKind) -> &'static str {
    match kind {
        StrategySourceKind::Joint => "joint",
        StrategySourceKind::Classifier => "classifier",
        StrategySourceKind::Oracle => "oracle",
    }
}

pub fn generations_file(kind: StrategySourceKind, fudge: bool) -> String {
    let suffix = if fudge { "_fudge" } else { "" };
    format!("generations_{}{suffix}.jsonl", source_name(kind))
}

/// Language model used with `kind`: the joint source needs the joint head.
pub fn lm_name(cfg: &RunConfig, kind: StrategySourceKind) -> &'static str {
    match (kind, cfg.generation.lm) {
        (StrategySourceKind::Joint, _) | (_, LmTarget::LmJoint) => "lm_joint",
        (_, LmTarget::Lm) => "lm",
    }
}

pub fn decoding_config(cfg: &RunConfig) -> DecodingConfig {
    DecodingConfig {
        seed: component_seed(cfg.seed, "decoding"),
        ..cfg.decoding.clone()
    }
}

/// Models needed for a generation run, loaded up front so that a missing
/// checkpoint is reported before any work starts.
pub struct Models {
    pub vocab: Vocabulary,
    pub lm: Lm,
    pub classifier: Option<Classifier>,
    pub discriminator: Option<Discriminator>,
}

impl Models {
    pub fn load(cfg: &RunConfig, kind: StrategySourceKind, fudge: bool) -> Result<Self, Failure> {
        let vocab = artifacts::load_vocabulary(cfg)?;
        let discriminator = if fudge {
            Some(artifacts::load_model::<Discriminator>(
                cfg,
                "discriminator",
                &vocab,
            )?)
        } else {
            None
        };
        let classifier = if kind == StrategySourceKind::Classifier {
            Some(artifacts::load_model::<Classifier>(
                cfg,
                "classifier",
                &vocab,
            )?)
        } else {
            None
        };
        let lm = artifacts::load_model::<Lm>(cfg, lm_name(cfg, kind), &vocab)?;
        Ok(Models {
            vocab,
            lm,
            classifier,
            discriminator,
        })
    }

    pub fn source(&self, kind: StrategySourceKind) -> StrategySource<'_, f64> {
        match kind {
            StrategySourceKind::Joint => StrategySource::JointHead(&self.lm),
            StrategySourceKind::Classifier => StrategySource::ExternalClassifier(
                self.classifier.as_ref().expect("classifier loaded"),
            ),
            StrategySourceKind::Oracle => StrategySource::Oracle,
        }
    }
}

pub fn run(cfg: &RunConfig, kind: StrategySourceKind, fudge: bool) -> Result<(), Failure> {
    cfg.require_inputs()?;
    let models = Models::load(cfg, kind, fudge)?;
    let dialogues = load_dataset(&cfg.data.test, &cfg.strategies)?;
    let knowledge = if cfg.commonsense.enabled {
        let mut backend = artifacts::commonsense_backend(cfg)?;
        Some(artifacts::dataset_knowledge(cfg, &dialogues, &mut backend)?)
    } else {
        None
    };
    let turns = batch_generate(
        &dialogues,
        knowledge.as_ref().map(|k| DatasetKnowledge {
            per_dialogue: k,
            scope: cfg.commonsense.scope,
        }),
        &models.vocab,
        &models.source(kind),
        &models.lm,
        models.discriminator.as_ref(),
        &decoding_config(cfg),
    )?;
    let records: Vec<_> = turns
        .iter()
        .map(|t| t.to_record(&models.vocab, &cfg.strategies))
        .collect();
    artifacts::ensure_dir(&cfg.output_dir)?;
    let path = cfg.out(&generations_file(kind, fudge));
    write_generations(&path, &records)?;
    println!(
        "generated {} responses -> {}",
        records.len(),
        path.display()
    );
    Ok(())
}
