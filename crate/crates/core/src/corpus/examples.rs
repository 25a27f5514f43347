use serde::{Deserialize, Serialize};

use super::{
    tokenize, Dialogue, SpeakerRole, StrategyLabel, StrategySet, TokenSequence, Vocabulary, CLS,
    EOS, SEP,
};
use crate::error::{Error, Result};

/// One (history, response) pair for a helper turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    /// `CLS situation (SEP utterance)* [SEP knowledge]`
    pub input: TokenSequence,
    /// `marker response EOS`
    pub target: TokenSequence,
    pub gold_strategy: StrategyLabel,
    pub dialogue_id: String,
    pub turn_index: usize,
}

impl TrainingExample {
    /// Response tokens without the leading marker and trailing EOS.
    pub fn response(&self) -> &[u32] {
        let ids = self.target.ids();
        let end = if ids.last() == Some(&EOS) {
            ids.len() - 1
        } else {
            ids.len()
        };
        &ids[1.min(end)..end]
    }

    pub fn to_record(&self, strategies: &StrategySet) -> ExampleRecord {
        ExampleRecord {
            dialogue_id: self.dialogue_id.clone(),
            turn_index: self.turn_index,
            gold_strategy: strategies.name(self.gold_strategy).to_string(),
            input: self.input.ids().to_vec(),
            target: self.target.ids().to_vec(),
        }
    }
}

/// Serialized form of a [`TrainingExample`], one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub gold_strategy: String,
    pub input: Vec<u32>,
    pub target: Vec<u32>,
}

impl ExampleRecord {
    pub fn into_example(
        self,
        strategies: &StrategySet,
        vocab: &Vocabulary,
    ) -> Result<TrainingExample> {
        let gold_strategy =
            strategies
                .lookup(&self.gold_strategy)
                .ok_or_else(|| Error::Validation {
                    dialogue_id: self.dialogue_id.clone(),
                    utterance: self.turn_index,
                    message: format!("unknown strategy {:?}", self.gold_strategy),
                })?;
        for &id in self.input.iter().chain(&self.target) {
            if id as usize >= vocab.len() {
                return Err(Error::InvalidToken {
                    id,
                    vocab_size: vocab.len(),
                });
            }
        }
        if self.input.first() != Some(&CLS)
            || self.target.first() != Some(&vocab.marker_id(gold_strategy))
        {
            return Err(Error::Validation {
                dialogue_id: self.dialogue_id,
                utterance: self.turn_index,
                message: "example does not start with CLS / its strategy marker".into(),
            });
        }
        Ok(TrainingExample {
            input: self.input.into(),
            target: self.target.into(),
            gold_strategy,
            dialogue_id: self.dialogue_id,
            turn_index: self.turn_index,
        })
    }
}

/// Which earlier utterances contribute knowledge sentences to a helper turn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeScope {
    /// Only the most recent seeker utterance before the turn.
    #[default]
    LatestSeeker,
    /// Every utterance before the turn, in dialogue order.
    AllPreceding,
}

impl KnowledgeScope {
    /// Indices of the utterances whose knowledge is appended for helper turn `turn`.
    pub fn sources(self, dialogue: &Dialogue, turn: usize) -> Vec<usize> {
        match self {
            KnowledgeScope::LatestSeeker => dialogue.utterances[..turn]
                .iter()
                .rposition(|u| u.role == SpeakerRole::Seeker)
                .into_iter()
                .collect(),
            KnowledgeScope::AllPreceding => (0..turn).collect(),
        }
    }
}

/// Verbalized commonsense sentences for each utterance of one dialogue.
#[derive(Debug, Clone, Copy)]
pub struct Knowledge<'a> {
    pub per_utterance: &'a [Vec<String>],
    pub scope: KnowledgeScope,
}

pub fn build_examples(
    dialogue: &Dialogue,
    vocab: &Vocabulary,
    knowledge: Option<Knowledge<'_>>,
) -> Vec<TrainingExample> {
    let mut history = TokenSequence::new(vec![CLS]);
    history.extend_from(&tokenize(&dialogue.situation, vocab));

    let mut out = Vec::new();
    for (i, utterance) in dialogue.utterances.iter().enumerate() {
        let tokens = tokenize(&utterance.text, vocab);
        if let (SpeakerRole::Helper, Some(strategy)) = (utterance.role, utterance.strategy) {
            let mut input = history.clone();
            if let Some(k) = knowledge {
                let sentences: Vec<&String> = k
                    .scope
                    .sources(dialogue, i)
                    .into_iter()
                    .filter_map(|j| k.per_utterance.get(j))
                    .flatten()
                    .collect();
                if !sentences.is_empty() {
                    input.push(SEP);
                    for s in sentences {
                        input.extend_from(&tokenize(s, vocab));
                    }
                }
            }
            let mut target = TokenSequence::new(vec![vocab.marker_id(strategy)]);
            target.extend_from(&tokens);
            target.push(EOS);
            out.push(TrainingExample {
                input,
                target,
                gold_strategy: strategy,
                dialogue_id: dialogue.id.clone(),
                turn_index: i,
            });
        }
        history.push(SEP);
        history.extend_from(&tokens);
    }
    out
}
