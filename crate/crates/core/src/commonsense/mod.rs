//! Relation-entailment commonsense knowledge: where tuples come from and how
//! they are turned into prompt sentences appended to the dialogue history.

mod backend;

pub use backend::{CacheRecord, CommonsenseBackend, EntailmentCache, RemoteService};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ten social relations, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Relation {
    OEffect,
    OReact,
    OWant,
    XAttr,
    XEffect,
    XIntent,
    XNeed,
    XReact,
    XReason,
    XWant,
}

impl Relation {
    pub const ALL: [Relation; 10] = [
        Relation::OEffect,
        Relation::OReact,
        Relation::OWant,
        Relation::XAttr,
        Relation::XEffect,
        Relation::XIntent,
        Relation::XNeed,
        Relation::XReact,
        Relation::XReason,
        Relation::XWant,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::OEffect => "oEffect",
            Relation::OReact => "oReact",
            Relation::OWant => "oWant",
            Relation::XAttr => "xAttr",
            Relation::XEffect => "xEffect",
            Relation::XIntent => "xIntent",
            Relation::XNeed => "xNeed",
            Relation::XReact => "xReact",
            Relation::XReason => "xReason",
            Relation::XWant => "xWant",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Relation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown relation {s:?}")))
    }
}

impl TryFrom<String> for Relation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Relation> for String {
    fn from(r: Relation) -> Self {
        r.name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonsenseTuple {
    pub relation: Relation,
    pub entailment: String,
}

impl CommonsenseTuple {
    pub fn new(relation: Relation, entailment: impl Into<String>) -> Result<Self> {
        let entailment = entailment.into().trim().to_string();
        if entailment.is_empty() {
            return Err(Error::InvalidInput(format!(
                "empty entailment for relation {relation}"
            )));
        }
        Ok(CommonsenseTuple {
            relation,
            entailment,
        })
    }
}

/// Orders a complete set of tuples canonically, rejecting gaps and duplicates.
pub(crate) fn canonical_tuples(tuples: Vec<CommonsenseTuple>) -> Result<Vec<CommonsenseTuple>> {
    let mut slots: [Option<CommonsenseTuple>; 10] = Default::default();
    for t in tuples {
        if t.entailment.trim().is_empty() {
            return Err(Error::InvalidInput(format!(
                "empty entailment for relation {}",
                t.relation
            )));
        }
        let i = t.relation.index();
        if slots[i].is_some() {
            return Err(Error::InvalidInput(format!(
                "relation {} repeated",
                t.relation
            )));
        }
        slots[i] = Some(t);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or_else(|| Error::InvalidInput(format!("relation {} missing", Relation::ALL[i])))
        })
        .collect()
}

const SLOT: &str = "{}";

/// One sentence template per relation, each with a single `{}` slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateTable {
    templates: [String; 10],
}

impl TemplateTable {
    pub fn new(templates: [String; 10]) -> Result<Self> {
        for (r, t) in Relation::ALL.iter().zip(&templates) {
            if t.matches(SLOT).count() != 1 {
                return Err(Error::Config(format!(
                    "template for {r} must contain exactly one {SLOT} slot"
                )));
            }
        }
        Ok(TemplateTable { templates })
    }

    pub fn template(&self, relation: Relation) -> &str {
        &self.templates[relation.index()]
    }

    pub fn verbalize(&self, tuple: &CommonsenseTuple) -> String {
        let sentence = self
            .template(tuple.relation)
            .replacen(SLOT, tuple.entailment.trim(), 1);
        if sentence.ends_with('.') {
            sentence
        } else {
            sentence + "."
        }
    }
}

impl Default for TemplateTable {
    fn default() -> Self {
        let t = |r: Relation| -> String {
            match r {
                Relation::OEffect => "As a result, others {}.",
                Relation::OReact => "As a result, others feel {}.",
                Relation::OWant => "As a result, others want {}.",
                Relation::XAttr => "PersonX is seen as {}.",
                Relation::XEffect => "As a result, PersonX {}.",
                Relation::XIntent => "Because PersonX wanted {}.",
                Relation::XNeed => "Before, PersonX needed {}.",
                Relation::XReact => "As a result, PersonX feels {}.",
                Relation::XReason => "Because {}.",
                Relation::XWant => "As a result, PersonX wants {}.",
            }
            .to_string()
        };
        TemplateTable::new(Relation::ALL.map(t)).expect("built-in templates are valid")
    }
}

pub fn verbalize(tuple: &CommonsenseTuple, table: &TemplateTable) -> String {
    table.verbalize(tuple)
}

/// Verbalized sentences for the selected relations, in canonical relation
/// order. Relations absent from `tuples` are skipped.
pub fn knowledge_sentences(
    tuples: &[CommonsenseTuple],
    table: &TemplateTable,
    selection: &[Relation],
) -> Vec<String> {
    let mut selected = selection.to_vec();
    selected.sort();
    selected.dedup();
    selected
        .into_iter()
        .filter_map(|r| tuples.iter().find(|t| t.relation == r))
        .map(|t| table.verbalize(t))
        .collect()
}

/// Separator placed between the history and the appended knowledge.
pub const KNOWLEDGE_SEPARATOR: &str = "<sep>";

/// Joins the history sentences and, when any relation is selected, appends
/// the separator followed by the selected verbalized tuples.
pub fn augment_history(
    history: &[String],
    tuples: &[CommonsenseTuple],
    table: &TemplateTable,
    selection: &[Relation],
) -> String {
    let joined = history.join(" ");
    let knowledge = knowledge_sentences(tuples, table, selection);
    if knowledge.is_empty() {
        return joined;
    }
    let mut parts = Vec::with_capacity(history.len() + knowledge.len() + 1);
    parts.extend(history.iter().map(String::as_str));
    parts.push(KNOWLEDGE_SEPARATOR);
    parts.extend(knowledge.iter().map(String::as_str));
    parts.join(" ")
}
