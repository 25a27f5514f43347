use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Dialogue, StrategyLabel, StrategySet, TokenSequence};
use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const CLS: u32 = 4;
pub const SEP: u32 = 5;

/// Reserved tokens in id order. Strategy markers follow immediately after.
pub const RESERVED_TOKENS: [&str; 6] = ["<pad>", "<bos>", "<eos>", "<unk>", "<cls>", "<sep>"];

/// Splits text into lowercase word tokens: whitespace separates tokens and
/// every character that is neither alphanumeric nor whitespace becomes a
/// token of its own.
pub fn tokenize_words(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
        } else if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            words.push(ch.to_lowercase().collect());
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

pub fn tokenize(text: &str, vocab: &Vocabulary) -> TokenSequence {
    TokenSequence::new(tokenize_words(text).iter().map(|w| vocab.id(w)).collect())
}

/// Token/id bijection with reserved entries at the lowest ids.
///
/// Layout: the six [`RESERVED_TOKENS`], then one marker token `[<name>]` per
/// strategy in strategy-set order, then corpus words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    strategy_count: usize,
}

/// On-disk form of a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyFile {
    pub strategies: Vec<String>,
    pub tokens: Vec<String>,
}

pub fn marker_token(name: &str) -> String {
    format!("[{name}]")
}

impl Vocabulary {
    fn reserved(strategies: &StrategySet) -> Vec<String> {
        RESERVED_TOKENS
            .iter()
            .map(|t| t.to_string())
            .chain(strategies.names().iter().map(|n| marker_token(n)))
            .collect()
    }

    /// Builds a vocabulary from reserved tokens plus `words` in the given order.
    pub fn from_words<I>(strategies: &StrategySet, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = String>,
    {
        let tokens: Vec<String> = Self::reserved(strategies)
            .into_iter()
            .chain(words)
            .collect();
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary entry {t:?}")));
            }
        }
        Ok(Vocabulary {
            tokens,
            index,
            strategy_count: strategies.len(),
        })
    }

    pub fn from_file(file: &VocabularyFile) -> Result<Self> {
        let strategies = StrategySet::new(file.strategies.clone())?;
        let reserved = Self::reserved(&strategies);
        if file.tokens.len() < reserved.len() || file.tokens[..reserved.len()] != reserved[..] {
            return Err(Error::Format(
                "vocabulary does not start with the reserved tokens".into(),
            ));
        }
        Self::from_words(&strategies, file.tokens[reserved.len()..].iter().cloned())
    }

    pub fn to_file(&self, strategies: &StrategySet) -> VocabularyFile {
        VocabularyFile {
            strategies: strategies.names().to_vec(),
            tokens: self.tokens.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn strategy_count(&self) -> usize {
        self.strategy_count
    }

    /// Id of `token`, or [`UNK`] when absent.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn marker_id(&self, label: StrategyLabel) -> u32 {
        debug_assert!(label.index() < self.strategy_count);
        (RESERVED_TOKENS.len() + label.index()) as u32
    }

    /// Strategy index encoded by a marker id, if `id` is a marker.
    pub fn marker_strategy(&self, id: u32) -> Option<usize> {
        let first = RESERVED_TOKENS.len() as u32;
        (id >= first && id < first + self.strategy_count as u32).then(|| (id - first) as usize)
    }

    pub fn is_marker(&self, id: u32) -> bool {
        self.marker_strategy(id).is_some()
    }

    /// Ids of all reserved and marker tokens.
    pub fn special_count(&self) -> usize {
        RESERVED_TOKENS.len() + self.strategy_count
    }

    pub fn decode(&self, seq: &TokenSequence) -> Vec<&str> {
        seq.ids()
            .iter()
            .map(|&id| self.token(id).unwrap_or("<unk>"))
            .collect()
    }

    /// Joins decoded tokens with single spaces, skipping reserved tokens and markers.
    pub fn detokenize(&self, ids: &[u32]) -> String {
        ids.iter()
            .filter(|&&id| id as usize >= self.special_count() || id == UNK)
            .map(|&id| self.token(id).unwrap_or("<unk>"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Word-frequency accumulator used to build a [`Vocabulary`].
#[derive(Debug, Clone, Default)]
pub struct VocabularyBuilder {
    counts: HashMap<String, usize>,
}

impl VocabularyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_text(&mut self, text: &str) {
        for w in tokenize_words(text) {
            *self.counts.entry(w).or_insert(0) += 1;
        }
    }

    pub fn add_dialogue(&mut self, dialogue: &Dialogue) {
        self.add_text(&dialogue.situation);
        for u in &dialogue.utterances {
            self.add_text(&u.text);
        }
    }

    /// Keeps words seen at least `min_count` times, ordered by descending
    /// frequency then lexicographically.
    pub fn build(&self, strategies: &StrategySet, min_count: usize) -> Result<Vocabulary> {
        if min_count < 1 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let reserved = Vocabulary::reserved(strategies);
        let mut kept: Vec<(&String, usize)> = self
            .counts
            .iter()
            .filter(|(w, &c)| c >= min_count && !reserved.contains(w))
            .map(|(w, &c)| (w, c))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Vocabulary::from_words(strategies, kept.into_iter().map(|(w, _)| w.clone()))
    }
}

pub fn build_vocabulary(
    dialogues: &[Dialogue],
    strategies: &StrategySet,
    min_count: usize,
) -> Result<Vocabulary> {
    if dialogues.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut builder = VocabularyBuilder::new();
    for d in dialogues {
        builder.add_dialogue(d);
    }
    builder.build(strategies, min_count)
}
