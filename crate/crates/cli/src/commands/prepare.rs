use steerdial_core::corpus::{build_examples, load_dataset, Knowledge, VocabularyBuilder};

use crate::artifacts::{self, SPLITS};
use crate::config::RunConfig;
use crate::failure::Failure;

/// Builds the vocabulary from the training split (including its knowledge
/// sentences) and writes tokenized examples for every split.
pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    cfg.require_inputs()?;
    let paths = [&cfg.data.train, &cfg.data.dev, &cfg.data.test];
    let mut splits = Vec::with_capacity(3);
    for path in paths {
        splits.push(load_dataset(path, &cfg.strategies)?);
    }

    let knowledge = if cfg.commonsense.enabled {
        let mut backend = artifacts::commonsense_backend(cfg)?;
        let mut all = Vec::with_capacity(3);
        for dialogues in &splits {
            all.push(Some(artifacts::dataset_knowledge(
                cfg,
                dialogues,
                &mut backend,
            )?));
        }
        all
    } else {
        vec![None, None, None]
    };

    let mut builder = VocabularyBuilder::new();
    for d in &splits[0] {
        builder.add_dialogue(d);
    }
    if let Some(k) = &knowledge[0] {
        k.iter()
            .flatten()
            .flatten()
            .for_each(|s| builder.add_text(s));
    }
    if splits[0].is_empty() {
        return Err(steerdial_core::Error::EmptyCorpus.into());
    }
    let vocab = builder.build(&cfg.strategies, cfg.min_count)?;

    artifacts::ensure_dir(&cfg.output_dir)?;
    artifacts::write_vocabulary(cfg, &vocab)?;
    let mut counts = Vec::with_capacity(3);
    for ((name, dialogues), k) in SPLITS.iter().zip(&splits).zip(&knowledge) {
        let mut examples = Vec::new();
        for (i, d) in dialogues.iter().enumerate() {
            let k = k.as_ref().map(|k| Knowledge {
                per_utterance: &k[i],
                scope: cfg.commonsense.scope,
            });
            examples.extend(build_examples(d, &vocab, k));
        }
        artifacts::write_examples(
            &cfg.out(&artifacts::examples_file(name)),
            &examples,
            &cfg.strategies,
        )?;
        counts.push(examples.len());
    }
    println!(
        "prepared {} train, {} dev, {} test examples; vocabulary of {} tokens in {}",
        counts[0],
        counts[1],
        counts[2],
        vocab.len(),
        cfg.output_dir.display()
    );
    Ok(())
}
