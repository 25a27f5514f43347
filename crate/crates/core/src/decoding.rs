//! Response generation with optional future-discriminator control.
//!
//! At every step the language model's next-token distribution is restricted
//! to its `k_f` most probable tokens and each candidate `c` is rescored as
//! `ln p_lm(c) + lambda * ln p_disc(strategy | prefix + c)`, then
//! renormalized over the candidates.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_examples, Dialogue, Knowledge, KnowledgeScope, StrategyLabel, StrategySet, TokenSequence,
    Vocabulary, EOS,
};
use crate::dist::{Categorical, NextTokenDistribution, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::lm::{EncodedContext, Seq2Seq};
use crate::scalar::Scalar;
use crate::seed::turn_seed;
use crate::strategy::{predict_strategy, DiscriminatorModel, PrefixState, StrategySource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodingMode {
    #[default]
    Greedy,
    TopKSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingConfig {
    pub mode: DecodingMode,
    pub sample_k: usize,
    /// Size of the candidate set rescored by the discriminator.
    pub fudge_candidates: usize,
    /// Control strength; 0 disables the discriminator's influence.
    pub lambda: f64,
    pub max_length: usize,
    pub seed: u64,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        DecodingConfig {
            mode: DecodingMode::Greedy,
            sample_k: 10,
            fudge_candidates: 32,
            lambda: 1.0,
            max_length: 64,
            seed: 0,
        }
    }
}

impl DecodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fudge_candidates == 0 || self.sample_k == 0 || self.max_length == 0 {
            return Err(Error::Config(
                "fudge_candidates, sample_k and max_length must be at least 1".into(),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Trace of one decoding step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub candidates: Vec<u32>,
    pub lm_probs: Vec<f64>,
    /// Empty when no discriminator is used.
    pub disc_probs: Vec<f64>,
    pub final_probs: Vec<f64>,
    pub chosen: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    /// Generated response without marker or EOS.
    pub tokens: TokenSequence,
    pub strategy_used: StrategyLabel,
    pub per_step_log: Option<Vec<StepLog>>,
}

/// The `k` most probable ids, ties broken by lowest id.
pub fn top_candidates<S: Scalar>(dist: &Categorical<S>, k: usize) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..dist.len() as u32).collect();
    ids.sort_by(|&a, &b| {
        dist.prob(b as usize)
            .partial_cmp(&dist.prob(a as usize))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    ids.truncate(k.min(dist.len()));
    ids
}

/// Combines LM probabilities with per-candidate discriminator probabilities.
fn combine<S: Scalar>(
    lm_dist: &NextTokenDistribution<S>,
    candidates: &[u32],
    disc_probs: &[S],
    lambda: f64,
) -> NextTokenDistribution<S> {
    let v = lm_dist.len();
    if lambda == 0.0 {
        // softmax(ln p) restricted to the candidates is p renormalized
        if candidates.len() == v {
            return lm_dist.clone();
        }
        let mass: S = candidates.iter().map(|&c| lm_dist.prob(c as usize)).sum();
        let mut probs = vec![S::zero(); v];
        for &c in candidates {
            probs[c as usize] = lm_dist.prob(c as usize) / mass;
        }
        return Categorical::from_probs(probs);
    }
    let lambda = S::of(lambda);
    let floor = S::of(PROB_FLOOR);
    let scores: Vec<S> = candidates
        .iter()
        .zip(disc_probs)
        .map(|(&c, &pd)| lm_dist.log_prob(c as usize) + lambda * pd.max(floor).ln())
        .collect();
    let renormalized = Categorical::from_logits(&scores);
    let mut probs = vec![S::zero(); v];
    for (&c, &p) in candidates.iter().zip(renormalized.probs()) {
        probs[c as usize] = p;
    }
    Categorical::from_probs(probs)
}

fn candidate_disc_probs<S: Scalar>(
    disc: &DiscriminatorModel<S>,
    state: &PrefixState<S>,
    candidates: &[u32],
    strategy: StrategyLabel,
) -> Result<Vec<S>> {
    candidates
        .iter()
        .map(|&c| {
            let (_, d) = disc.inner().advance(state, c)?;
            Ok(d.prob(strategy.index()))
        })
        .collect()
}

fn prefix_state<S: Scalar>(
    disc: &DiscriminatorModel<S>,
    prefix: &TokenSequence,
) -> Result<PrefixState<S>> {
    let mut state = disc.inner().start();
    for &id in prefix.ids() {
        state = disc.inner().advance(&state, id)?.0;
    }
    Ok(state)
}

/// Reweights `lm_dist` towards `strategy` using the discriminator's
/// prediction for each of the `k_f` most probable continuations of `prefix`.
pub fn fudge_rescore<S: Scalar>(
    lm_dist: &NextTokenDistribution<S>,
    prefix: &TokenSequence,
    strategy: StrategyLabel,
    disc: &DiscriminatorModel<S>,
    k_f: usize,
    lambda: f64,
) -> Result<NextTokenDistribution<S>> {
    if k_f == 0 || lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Config("k_f must be >= 1 and lambda >= 0".into()));
    }
    let candidates = top_candidates(lm_dist, k_f);
    let state = prefix_state(disc, prefix)?;
    let disc_probs = candidate_disc_probs(disc, &state, &candidates, strategy)?;
    Ok(combine(lm_dist, &candidates, &disc_probs, lambda))
}

fn sample_top_k<S: Scalar>(dist: &Categorical<S>, k: usize, rng: &mut ChaCha8Rng) -> u32 {
    let top = top_candidates(dist, k);
    let total: f64 = top.iter().map(|&c| dist.prob(c as usize).as_f64()).sum();
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for &c in &top {
        acc += dist.prob(c as usize).as_f64();
        if u < acc {
            return c;
        }
    }
    *top.last().expect("k >= 1")
}

/// Generates one response conditioned on `strategy`.
pub fn decode_utterance<S: Scalar>(
    ctx: &EncodedContext<S>,
    strategy: StrategyLabel,
    lm: &Seq2Seq<S>,
    vocab: &Vocabulary,
    disc: Option<&DiscriminatorModel<S>>,
    cfg: &DecodingConfig,
    trace: bool,
) -> Result<GenerationResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut lm_state = lm.decoder_start(ctx);
    let mut disc_state = disc.map(|d| d.inner().start());
    let mut fed = vocab.marker_id(strategy);
    let mut tokens = TokenSequence::default();
    let mut log = trace.then(Vec::new);

    for _ in 0..cfg.max_length {
        let (next_state, lm_dist) = lm.decoder_step(&lm_state, fed)?;
        lm_state = next_state;

        let (final_dist, candidates, disc_probs) = match (disc, &disc_state) {
            (Some(d), Some(state)) => {
                let candidates = top_candidates(&lm_dist, cfg.fudge_candidates);
                let disc_probs = candidate_disc_probs(d, state, &candidates, strategy)?;
                let combined = combine(&lm_dist, &candidates, &disc_probs, cfg.lambda);
                (combined, candidates, disc_probs)
            }
            _ => (lm_dist.clone(), Vec::new(), Vec::new()),
        };

        let chosen = match cfg.mode {
            DecodingMode::Greedy => final_dist.argmax() as u32,
            DecodingMode::TopKSample => sample_top_k(&final_dist, cfg.sample_k, &mut rng),
        };

        if let Some(log) = log.as_mut() {
            let shown = if candidates.is_empty() {
                top_candidates(&final_dist, cfg.fudge_candidates)
            } else {
                candidates
            };
            log.push(StepLog {
                lm_probs: shown
                    .iter()
                    .map(|&c| lm_dist.prob(c as usize).as_f64())
                    .collect(),
                disc_probs: disc_probs.iter().map(|p| p.as_f64()).collect(),
                final_probs: shown
                    .iter()
                    .map(|&c| final_dist.prob(c as usize).as_f64())
                    .collect(),
                candidates: shown,
                chosen,
            });
        }

        if chosen == EOS {
            break;
        }
        if !vocab.is_marker(chosen) {
            tokens.push(chosen);
            if let (Some(d), Some(state)) = (disc, disc_state.as_mut()) {
                *state = d.inner().advance(state, chosen)?.0;
            }
        }
        fed = chosen;
    }

    Ok(GenerationResult {
        tokens,
        strategy_used: strategy,
        per_step_log: log,
    })
}

/// One generated helper turn with its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTurn {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub result: GenerationResult,
    pub reference: String,
    pub gold_strategy: StrategyLabel,
}

impl GeneratedTurn {
    pub fn to_record(&self, vocab: &Vocabulary, strategies: &StrategySet) -> GenerationRecord {
        GenerationRecord {
            dialogue_id: self.dialogue_id.clone(),
            turn_index: self.turn_index,
            strategy_used: strategies.name(self.result.strategy_used).to_string(),
            text: vocab.detokenize(self.result.tokens.ids()),
            reference: self.reference.clone(),
            gold_strategy: strategies.name(self.gold_strategy).to_string(),
        }
    }
}

/// Commonsense sentences for a whole dataset: `per_dialogue[d][u]` holds the
/// sentences of utterance `u` of dialogue `d`.
#[derive(Debug, Clone, Copy)]
pub struct DatasetKnowledge<'a> {
    pub per_dialogue: &'a [Vec<Vec<String>>],
    pub scope: KnowledgeScope,
}

/// Generates a response for every helper turn of `dialogues`.
///
/// Each turn decodes with its own RNG seeded by
/// [`turn_seed`]`(cfg.seed, dialogue_id, turn_index)`.
#[allow(clippy::too_many_arguments)]
pub fn batch_generate<S: Scalar>(
    dialogues: &[Dialogue],
    knowledge: Option<DatasetKnowledge<'_>>,
    vocab: &Vocabulary,
    source: &StrategySource<'_, S>,
    lm: &Seq2Seq<S>,
    disc: Option<&DiscriminatorModel<S>>,
    cfg: &DecodingConfig,
) -> Result<Vec<GeneratedTurn>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (d_index, dialogue) in dialogues.iter().enumerate() {
        let with_context = |e: Error| Error::InDialogue {
            dialogue_id: dialogue.id.clone(),
            source: Box::new(e),
        };
        let k = knowledge.map(|k| Knowledge {
            per_utterance: k.per_dialogue.get(d_index).map_or(&[][..], Vec::as_slice),
            scope: k.scope,
        });
        for example in build_examples(dialogue, vocab, k) {
            let strategy = predict_strategy(&example.input, source, Some(example.gold_strategy))
                .map_err(with_context)?;
            let ctx = lm.encode(&example.input).map_err(with_context)?;
            let turn_cfg = DecodingConfig {
                seed: turn_seed(cfg.seed, &dialogue.id, example.turn_index),
                ..cfg.clone()
            };
            let result = decode_utterance(&ctx, strategy, lm, vocab, disc, &turn_cfg, false)
                .map_err(with_context)?;
            out.push(GeneratedTurn {
                dialogue_id: dialogue.id.clone(),
                turn_index: example.turn_index,
                result,
                reference: dialogue.utterances[example.turn_index].text.clone(),
                gold_strategy: example.gold_strategy,
            });
        }
    }
    Ok(out)
}

/// One line of a generation output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub strategy_used: String,
    pub text: String,
    pub reference: String,
    pub gold_strategy: String,
}

pub fn write_generations(path: &Path, records: &[GenerationRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("generation records serialize"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_generations(path: &Path) -> Result<Vec<GenerationRecord>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
