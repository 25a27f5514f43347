use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dialogue, SpeakerRole, StrategySet, Utterance};
use crate::error::{Error, Result};

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub id: String,
    pub situation: String,
    pub utterances: Vec<UtteranceRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub role: SpeakerRole,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
}

impl DialogueRecord {
    fn validate(self, strategies: &StrategySet) -> Result<Dialogue> {
        let invalid = |utterance: usize, message: String| Error::Validation {
            dialogue_id: self.id.clone(),
            utterance,
            message,
        };
        if self.utterances.is_empty() {
            return Err(invalid(0, "dialogue has no utterances".into()));
        }
        let mut utterances = Vec::with_capacity(self.utterances.len());
        for (i, u) in self.utterances.iter().enumerate() {
            let strategy = match (u.role, &u.strategy) {
                (SpeakerRole::Helper, None) => {
                    return Err(invalid(i, "helper utterance has no strategy".into()))
                }
                (SpeakerRole::Helper, Some(name)) => Some(
                    strategies
                        .lookup(name)
                        .ok_or_else(|| invalid(i, format!("unknown strategy {name:?}")))?,
                ),
                (SpeakerRole::Seeker, Some(_)) => {
                    return Err(invalid(i, "seeker utterance carries a strategy".into()))
                }
                (SpeakerRole::Seeker, None) => None,
            };
            utterances.push(Utterance {
                role: u.role,
                text: u.text.clone(),
                strategy,
            });
        }
        Ok(Dialogue {
            id: self.id,
            situation: self.situation,
            utterances,
        })
    }

    pub fn from_dialogue(dialogue: &Dialogue, strategies: &StrategySet) -> Self {
        DialogueRecord {
            id: dialogue.id.clone(),
            situation: dialogue.situation.clone(),
            utterances: dialogue
                .utterances
                .iter()
                .map(|u| UtteranceRecord {
                    role: u.role,
                    text: u.text.clone(),
                    strategy: u.strategy.map(|s| strategies.name(s).to_string()),
                })
                .collect(),
        }
    }
}

/// Parses JSON Lines dataset content. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn parse_dataset(
    content: &str,
    source: &Path,
    strategies: &StrategySet,
) -> Result<Vec<Dialogue>> {
    let mut dialogues = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DialogueRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: source.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::Validation {
                dialogue_id: record.id,
                utterance: 0,
                message: "duplicate dialogue id".into(),
            });
        }
        dialogues.push(record.validate(strategies)?);
    }
    Ok(dialogues)
}

pub fn load_dataset(path: &Path, strategies: &StrategySet) -> Result<Vec<Dialogue>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&content, path, strategies)
}

pub fn write_dataset(path: &Path, dialogues: &[Dialogue], strategies: &StrategySet) -> Result<()> {
    let mut out = String::new();
    for d in dialogues {
        let line = serde_json::to_string(&DialogueRecord::from_dialogue(d, strategies))
            .expect("dialogue records always serialize");
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
