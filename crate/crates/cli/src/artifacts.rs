//! Files exchanged between commands, all inside the output directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use steerdial_core::checkpoint::{Checkpoint, Checkpointable};
use steerdial_core::commonsense::{
    knowledge_sentences, CommonsenseBackend, EntailmentCache, RemoteService, TemplateTable,
};
use steerdial_core::corpus::{
    Dialogue, ExampleRecord, StrategySet, TrainingExample, Vocabulary, VocabularyFile,
};
use steerdial_core::Error;

use crate::config::{BackendConfig, RunConfig};
use crate::failure::Failure;

pub const VOCAB_FILE: &str = "vocab.json";
pub const SPLITS: [&str; 3] = ["train", "dev", "test"];

pub fn examples_file(split: &str) -> String {
    format!("examples_{split}.jsonl")
}

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

pub fn json_line<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("artifacts serialize");
    s.push('\n');
    s
}

pub fn write_vocabulary(cfg: &RunConfig, vocab: &Vocabulary) -> Result<PathBuf, Failure> {
    let path = cfg.out(VOCAB_FILE);
    write_bytes(&path, json_line(&vocab.to_file(&cfg.strategies)).as_bytes())?;
    Ok(path)
}

pub fn write_examples(
    path: &Path,
    examples: &[TrainingExample],
    strategies: &StrategySet,
) -> Result<(), Failure> {
    let text: String = examples
        .iter()
        .map(|e| json_line(&e.to_record(strategies)))
        .collect();
    write_bytes(path, text.as_bytes())
}

fn prepared(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        Failure::data(format!(
            "cannot read {}: {e}; run `steerdial prepare` first",
            path.display()
        ))
    })
}

/// The prepared vocabulary; its strategy set must match the config.
pub fn load_vocabulary(cfg: &RunConfig) -> Result<Vocabulary, Failure> {
    let path = cfg.out(VOCAB_FILE);
    let file: VocabularyFile = serde_json::from_str(&prepared(&path)?)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    if file.strategies != cfg.strategies.names() {
        return Err(Failure::data(format!(
            "{} was prepared for strategies {:?}, config lists {:?}; rerun prepare",
            path.display(),
            file.strategies,
            cfg.strategies.names()
        )));
    }
    Ok(Vocabulary::from_file(&file)?)
}

pub fn load_examples(
    cfg: &RunConfig,
    split: &str,
    vocab: &Vocabulary,
) -> Result<Vec<TrainingExample>, Failure> {
    let path = cfg.out(&examples_file(split));
    let text = prepared(&path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let record: ExampleRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            Ok(record.into_example(&cfg.strategies, vocab)?)
        })
        .collect()
}

pub fn commonsense_backend(cfg: &RunConfig) -> Result<CommonsenseBackend, Failure> {
    let cs = &cfg.commonsense;
    Ok(match &cs.backend {
        BackendConfig::Cache => CommonsenseBackend::Cache(EntailmentCache::open(&cs.cache)?),
        BackendConfig::Remote { endpoint, .. } => CommonsenseBackend::Remote {
            service: RemoteService::new(endpoint.clone(), cs.timeout().expect("remote backend")),
            cache: EntailmentCache::open_or_create(&cs.cache)?,
        },
    })
}

/// Verbalized knowledge for every utterance that feeds some helper turn;
/// other utterances get no sentences and are never sent to the backend.
pub fn dataset_knowledge(
    cfg: &RunConfig,
    dialogues: &[Dialogue],
    backend: &mut CommonsenseBackend,
) -> Result<Vec<Vec<Vec<String>>>, Failure> {
    let table = TemplateTable::default();
    let scope = cfg.commonsense.scope;
    dialogues
        .iter()
        .map(|d| {
            let needed: BTreeSet<usize> = d
                .helper_turns()
                .flat_map(|(turn, _)| scope.sources(d, turn))
                .collect();
            let mut per_utterance = vec![Vec::new(); d.utterances.len()];
            for j in needed {
                let tuples = backend
                    .generate_tuples(&d.utterances[j].text)
                    .map_err(|e| Error::InDialogue {
                        dialogue_id: d.id.clone(),
                        source: Box::new(e),
                    })?;
                per_utterance[j] = knowledge_sentences(&tuples, &table, &cfg.commonsense.relations);
            }
            Ok(per_utterance)
        })
        .collect()
}

/// Loads `<name>.ckpt`, checking it against the prepared vocabulary.
pub fn load_model<M: Checkpointable<f64>>(
    cfg: &RunConfig,
    name: &str,
    vocab: &Vocabulary,
) -> Result<M, Failure> {
    let path = cfg.out(&format!("{name}.ckpt"));
    if !path.is_file() {
        return Err(Failure::model(format!(
            "missing {name} checkpoint {}; run `steerdial train {name}` first",
            path.display()
        )));
    }
    Ok(Checkpoint::<M>::load_for::<f64>(&path, vocab)?.model)
}
