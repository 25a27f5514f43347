use std::fs::{File, OpenOptions};
use std::io::{BufRead, Write};

use serde::Serialize;
use steerdial_core::commonsense::{knowledge_sentences, CommonsenseBackend, TemplateTable};
use steerdial_core::corpus::{
    build_examples, Dialogue, Knowledge, SpeakerRole, StrategyLabel, Utterance,
};
use steerdial_core::decoding::decode_utterance;
use steerdial_core::seed::turn_seed;
use steerdial_core::strategy::{predict_strategy, StrategySourceKind};
use steerdial_core::Error;

use super::generate::{decoding_config, Models};
use crate::artifacts;
use crate::config::RunConfig;
use crate::failure::Failure;

pub const TRANSCRIPT_FILE: &str = "chat_transcript.jsonl";
const DIALOGUE_ID: &str = "chat";

#[derive(Debug, Serialize)]
struct TranscriptRow<'a> {
    turn: usize,
    seeker: &'a str,
    strategy: &'a str,
    overridden: bool,
    response: &'a str,
}

struct Session<'a> {
    cfg: &'a RunConfig,
    models: &'a Models,
    kind: StrategySourceKind,
    backend: Option<CommonsenseBackend>,
    table: TemplateTable,
    dialogue: Dialogue,
    knowledge: Vec<Vec<String>>,
    pending: Option<StrategyLabel>,
    turns: usize,
}

impl Session<'_> {
    /// Knowledge for one seeker utterance; a text without entailments gets none.
    fn knowledge_for(&mut self, text: &str, out: &mut impl Write) -> Result<Vec<String>, Failure> {
        let Some(backend) = self.backend.as_mut() else {
            return Ok(Vec::new());
        };
        match backend.generate_tuples(text) {
            Ok(tuples) => Ok(knowledge_sentences(
                &tuples,
                &self.table,
                &self.cfg.commonsense.relations,
            )),
            Err(Error::MissingEntailment(_)) => {
                writeln!(out, "(no cached commonsense for this turn)").map_err(io_failure)?;
                Ok(Vec::new())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn respond(
        &mut self,
        text: &str,
        out: &mut impl Write,
    ) -> Result<(String, StrategyLabel, bool, String), Failure> {
        let sentences = self.knowledge_for(text, out)?;
        self.dialogue.utterances.push(Utterance {
            role: SpeakerRole::Seeker,
            text: text.to_string(),
            strategy: None,
        });
        self.knowledge.push(sentences);

        let placeholder = self.cfg.strategies.label(0)?;
        self.dialogue.utterances.push(Utterance {
            role: SpeakerRole::Helper,
            text: String::new(),
            strategy: Some(placeholder),
        });
        self.knowledge.push(Vec::new());
        let knowledge = self.backend.as_ref().map(|_| Knowledge {
            per_utterance: &self.knowledge,
            scope: self.cfg.commonsense.scope,
        });
        let example = build_examples(&self.dialogue, &self.models.vocab, knowledge)
            .pop()
            .expect("placeholder helper turn");

        let overridden = self.pending.is_some();
        let strategy = match self.pending.take() {
            Some(s) => s,
            None => predict_strategy(&example.input, &self.models.source(self.kind), None)?,
        };
        let lm = &self.models.lm;
        let decoding = steerdial_core::decoding::DecodingConfig {
            seed: turn_seed(
                decoding_config(self.cfg).seed,
                DIALOGUE_ID,
                example.turn_index,
            ),
            ..self.cfg.decoding.clone()
        };
        let result = decode_utterance(
            &lm.encode(&example.input)?,
            strategy,
            lm,
            &self.models.vocab,
            self.models.discriminator.as_ref(),
            &decoding,
            false,
        )?;
        let response = self.models.vocab.detokenize(result.tokens.ids());
        let helper = self.dialogue.utterances.last_mut().expect("helper turn");
        helper.text = response.clone();
        helper.strategy = Some(strategy);
        self.turns += 1;
        Ok((text.to_string(), strategy, overridden, response))
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::data(format!("chat i/o error: {e}"))
}

/// Reads seeker turns from `input` until `/quit` or end of input.
pub fn session(
    cfg: &RunConfig,
    kind: StrategySourceKind,
    fudge: bool,
    input: impl BufRead,
    mut out: impl Write,
) -> Result<(), Failure> {
    if kind == StrategySourceKind::Oracle {
        return Err(Failure::usage(
            "chat has no gold strategies; use the joint or classifier source",
        ));
    }
    let models = Models::load(cfg, kind, fudge)?;
    let backend = if cfg.commonsense.enabled {
        Some(artifacts::commonsense_backend(cfg)?)
    } else {
        None
    };
    artifacts::ensure_dir(&cfg.output_dir)?;
    let path = cfg.out(TRANSCRIPT_FILE);
    File::create(&path)
        .map_err(|e| Failure::data(format!("cannot create {}: {e}", path.display())))?;
    let mut transcript = OpenOptions::new()
        .append(true)
        .open(&path)
        .map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))?;

    let mut s = Session {
        cfg,
        models: &models,
        kind,
        backend,
        table: TemplateTable::default(),
        dialogue: Dialogue {
            id: DIALOGUE_ID.to_string(),
            situation: String::new(),
            utterances: Vec::new(),
        },
        knowledge: Vec::new(),
        pending: None,
        turns: 0,
    };
    writeln!(
        out,
        "type a message; /strategy <name> sets the next strategy, /quit exits"
    )
    .map_err(io_failure)?;
    for line in input.lines() {
        let line = line.map_err(io_failure)?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "/quit" {
            break;
        }
        if let Some(name) = line.strip_prefix("/strategy") {
            let name = name.trim();
            match cfg.strategies.lookup(name) {
                Some(label) => {
                    s.pending = Some(label);
                    writeln!(out, "next strategy: {name}").map_err(io_failure)?;
                }
                None => writeln!(
                    out,
                    "unknown strategy {name:?}; choose one of: {}",
                    cfg.strategies.names().join(", ")
                )
                .map_err(io_failure)?,
            }
            continue;
        }
        let (seeker, strategy, overridden, response) = s.respond(line, &mut out)?;
        let name = cfg.strategies.name(strategy);
        writeln!(out, "[{name}] {response}").map_err(io_failure)?;
        let row = TranscriptRow {
            turn: s.turns,
            seeker: &seeker,
            strategy: name,
            overridden,
            response: &response,
        };
        transcript
            .write_all(artifacts::json_line(&row).as_bytes())
            .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
