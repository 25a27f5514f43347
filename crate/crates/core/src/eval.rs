//! Automatic metrics over generated responses.
//!
//! BLEU is corpus-level with pooled clipped n-gram counts, a single reference
//! per candidate and no smoothing: any zero precision makes the score 0.
//! ROUGE-L is the LCS-based F1 (beta = 1) of each pair, macro-averaged.

use std::collections::HashMap;
use std::fs;
use std::hash::Hash;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize_words, StrategyLabel, StrategySet};
use crate::decoding::read_generations;
use crate::error::{Error, Result};

fn check_lengths<A, B>(left: &[A], right: &[B]) -> Result<()> {
    if left.len() != right.len() {
        return Err(Error::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    Ok(())
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU-`n`: brevity penalty times the geometric mean of the clipped
/// k-gram precisions for `k = 1..=n`.
pub fn bleu_n<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<T>], n: usize) -> Result<f64> {
    check_lengths(candidates, references)?;
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "BLEU order must be 1..=4, got {n}"
        )));
    }
    let mut log_precision_sum = 0.0;
    for k in 1..=n {
        let mut matched = 0usize;
        let mut total = 0usize;
        for (cand, reference) in candidates.iter().zip(references) {
            let ref_counts = ngram_counts(reference, k);
            for (gram, count) in ngram_counts(cand, k) {
                matched += count.min(ref_counts.get(gram).copied().unwrap_or(0));
                total += count;
            }
        }
        if matched == 0 || total == 0 {
            return Ok(0.0);
        }
        log_precision_sum += (matched as f64 / total as f64).ln();
    }
    let c: usize = candidates.iter().map(Vec::len).sum();
    let r: usize = references.iter().map(Vec::len).sum();
    let bp = if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    Ok(bp * (log_precision_sum / n as f64).exp())
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_l_pair<T: Eq>(cand: &[T], reference: &[T]) -> f64 {
    let lcs = lcs_len(cand, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / cand.len() as f64;
    let r = lcs / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// Mean over pairs of the LCS F1 score.
pub fn rouge_l<T: Eq>(candidates: &[Vec<T>], references: &[Vec<T>]) -> Result<f64> {
    check_lengths(candidates, references)?;
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no pairs to score".into()));
    }
    let sum: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| rouge_l_pair(c, r))
        .sum();
    Ok(sum / candidates.len() as f64)
}

pub fn strategy_accuracy(predicted: &[StrategyLabel], gold: &[StrategyLabel]) -> Result<f64> {
    check_lengths(predicted, gold)?;
    if predicted.is_empty() {
        return Err(Error::EmptyInput("no strategy predictions".into()));
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Metrics in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub bleu: [f64; 4],
    pub rouge_l: f64,
    pub strategy_accuracy: f64,
    pub count: usize,
    /// Externally computed BERTScore, when supplied.
    pub bertscore: Option<f64>,
}

/// Serialized report: BLEU and ROUGE-L scaled by 100, accuracy as a fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub bleu_4: f64,
    pub rouge_l: f64,
    pub strategy_accuracy: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bertscore: Option<f64>,
}

impl EvaluationReport {
    pub fn to_file(&self) -> ReportFile {
        ReportFile {
            bleu_1: 100.0 * self.bleu[0],
            bleu_2: 100.0 * self.bleu[1],
            bleu_3: 100.0 * self.bleu[2],
            bleu_4: 100.0 * self.bleu[3],
            rouge_l: 100.0 * self.rouge_l,
            strategy_accuracy: self.strategy_accuracy,
            count: self.count,
            bertscore: self.bertscore,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_file()).expect("report serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let f = self.to_file();
        format!(
            "{:>8} {:>8} {:>8} {:>8} {:>8} {:>9} {:>6}\n{:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2}% {:>6}",
            "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-L", "StratAcc", "n",
            f.bleu_1, f.bleu_2, f.bleu_3, f.bleu_4, f.rouge_l, 100.0 * f.strategy_accuracy, f.count
        )
    }
}

/// Scores a generation file: texts and references are tokenized with the
/// corpus word tokenizer.
pub fn evaluate_run(generation_file: &Path, strategies: &StrategySet) -> Result<EvaluationReport> {
    let records = read_generations(generation_file)?;
    if records.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} contains no generations",
            generation_file.display()
        )));
    }
    let mut candidates = Vec::with_capacity(records.len());
    let mut references = Vec::with_capacity(records.len());
    let mut predicted = Vec::with_capacity(records.len());
    let mut gold = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let label = |name: &str| {
            strategies.lookup(name).ok_or_else(|| Error::Parse {
                path: generation_file.to_path_buf(),
                line: i + 1,
                message: format!("unknown strategy {name:?}"),
            })
        };
        predicted.push(label(&r.strategy_used)?);
        gold.push(label(&r.gold_strategy)?);
        candidates.push(tokenize_words(&r.text));
        references.push(tokenize_words(&r.reference));
    }
    let mut bleu = [0.0; 4];
    for (n, slot) in bleu.iter_mut().enumerate() {
        *slot = bleu_n(&candidates, &references, n + 1)?;
    }
    Ok(EvaluationReport {
        bleu,
        rouge_l: rouge_l(&candidates, &references)?,
        strategy_accuracy: strategy_accuracy(&predicted, &gold)?,
        count: records.len(),
        bertscore: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize_words(s)
    }

    #[test]
    fn identical_pair_scores_one() {
        let c = vec![toks("i am here for you .")];
        for n in 1..=4 {
            assert!((bleu_n(&c, &c, n).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(rouge_l(&c, &c).unwrap(), 1.0);
    }

    #[test]
    fn clipped_unigram_precision() {
        let b = bleu_n(&[toks("the the the")], &[toks("the cat")], 1).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_overlap_is_zero() {
        assert_eq!(bleu_n(&[toks("a b")], &[toks("c d")], 1).unwrap(), 0.0);
        assert_eq!(rouge_l(&[toks("a b")], &[toks("c d")]).unwrap(), 0.0);
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        let b = bleu_n(&[toks("a b")], &[toks("a b c d")], 1).unwrap();
        assert!((b - (1.0f64 - 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn lcs_f1() {
        let f = rouge_l(&[toks("a b c d")], &[toks("a c d e")]).unwrap();
        assert!((f - 0.75).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_and_bad_order() {
        assert!(matches!(
            bleu_n(&[toks("a")], &[], 1),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(bleu_n(&[toks("a")], &[toks("a")], 5).is_err());
        assert!(matches!(
            rouge_l::<String>(&[], &[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn accuracy_cases() {
        let l = |i| StrategyLabel(i);
        assert_eq!(
            strategy_accuracy(&[l(0), l(1)], &[l(0), l(1)]).unwrap(),
            1.0
        );
        assert_eq!(
            strategy_accuracy(&[l(0), l(1)], &[l(1), l(0)]).unwrap(),
            0.0
        );
        assert_eq!(
            strategy_accuracy(&[l(0), l(1)], &[l(0), l(0)]).unwrap(),
            0.5
        );
        assert!(matches!(
            strategy_accuracy(&[], &[]),
            Err(Error::EmptyInput(_))
        ));
        assert!(strategy_accuracy(&[l(0)], &[]).is_err());
    }
}
