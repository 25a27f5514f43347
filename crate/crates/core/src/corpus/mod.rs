//! Strategy-annotated dialogue corpora: data model, tokenizer, vocabulary,
//! JSON Lines loading and conversion into training examples.

mod dataset;
mod examples;
mod vocab;

pub use dataset::{load_dataset, parse_dataset, write_dataset, DialogueRecord, UtteranceRecord};
pub use examples::{build_examples, ExampleRecord, Knowledge, KnowledgeScope, TrainingExample};
pub use vocab::{
    build_vocabulary, tokenize, tokenize_words, Vocabulary, VocabularyBuilder, VocabularyFile, BOS,
    CLS, EOS, PAD, RESERVED_TOKENS, SEP, UNK,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeakerRole {
    Seeker,
    Helper,
}

/// Ordered set of dialogue strategy names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StrategySet {
    labels: Vec<String>,
}

impl StrategySet {
    pub const DEFAULT: [&'static str; 8] = [
        "Question",
        "Restatement or Paraphrasing",
        "Reflection of feelings",
        "Self-disclosure",
        "Affirmation and Reassurance",
        "Providing Suggestions",
        "Information",
        "Others",
    ];

    pub fn new<I, T>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Config("strategy set is empty".into()));
        }
        for (i, name) in labels.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(Error::Config(format!("strategy {i} has an empty name")));
            }
            if labels[..i].contains(name) {
                return Err(Error::Config(format!("duplicate strategy name {name:?}")));
            }
        }
        Ok(StrategySet { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.labels
    }

    pub fn name(&self, label: StrategyLabel) -> &str {
        &self.labels[label.index()]
    }

    /// Case-sensitive lookup.
    pub fn lookup(&self, name: &str) -> Option<StrategyLabel> {
        self.labels
            .iter()
            .position(|l| l == name)
            .map(StrategyLabel)
    }

    pub fn label(&self, index: usize) -> Result<StrategyLabel> {
        if index < self.len() {
            Ok(StrategyLabel(index))
        } else {
            Err(Error::InvalidInput(format!(
                "strategy index {index} out of range for {} strategies",
                self.len()
            )))
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = StrategyLabel> + '_ {
        (0..self.len()).map(StrategyLabel)
    }
}

impl Default for StrategySet {
    fn default() -> Self {
        StrategySet::new(Self::DEFAULT).expect("default strategy set is valid")
    }
}

impl TryFrom<Vec<String>> for StrategySet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        StrategySet::new(v)
    }
}

impl From<StrategySet> for Vec<String> {
    fn from(s: StrategySet) -> Self {
        s.labels
    }
}

/// Index into a [`StrategySet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyLabel(pub(crate) usize);

impl StrategyLabel {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Token ids under one run's [`Vocabulary`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<u32>);

impl TokenSequence {
    pub fn new(ids: Vec<u32>) -> Self {
        TokenSequence(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, id: u32) {
        self.0.push(id);
    }

    pub fn extend_from(&mut self, other: &TokenSequence) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn into_ids(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for TokenSequence {
    fn from(ids: Vec<u32>) -> Self {
        TokenSequence(ids)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub role: SpeakerRole,
    pub text: String,
    /// Present exactly for helper turns.
    pub strategy: Option<StrategyLabel>,
}

impl Utterance {
    pub fn tokens(&self, vocab: &Vocabulary) -> TokenSequence {
        tokenize(&self.text, vocab)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    /// The help-seeker's problem description.
    pub situation: String,
    pub utterances: Vec<Utterance>,
}

impl Dialogue {
    pub fn helper_turns(&self) -> impl Iterator<Item = (usize, &Utterance)> {
        self.utterances
            .iter()
            .enumerate()
            .filter(|(_, u)| u.role == SpeakerRole::Helper)
    }
}
