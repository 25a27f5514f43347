#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steerdial_core::corpus::{StrategySet, TrainingExample, CLS, EOS, RESERVED_TOKENS};
use steerdial_core::lm::ModelConfig;
use steerdial_core::nn::Parameters;
use steerdial_core::strategy::RecurrentConfig;

pub const FD_STEP: f64 = 1e-4;

pub fn strategies(n: usize) -> StrategySet {
    StrategySet::new((0..n).map(|i| format!("S{i}"))).unwrap()
}

/// First id usable for ordinary words given `n` strategies.
pub fn first_word(n: usize) -> u32 {
    (RESERVED_TOKENS.len() + n) as u32
}

pub fn random_example(
    rng: &mut ChaCha8Rng,
    vocab_size: usize,
    strategy_count: usize,
    input_len: usize,
    response_len: usize,
) -> TrainingExample {
    let set = strategies(strategy_count);
    let lo = first_word(strategy_count);
    let word = |rng: &mut ChaCha8Rng| rng.gen_range(lo..vocab_size as u32);
    let gold = set.label(rng.gen_range(0..strategy_count)).unwrap();
    let mut input = vec![CLS];
    input.extend((1..input_len).map(|_| word(rng)));
    let mut target = vec![(RESERVED_TOKENS.len() + gold.index()) as u32];
    target.extend((0..response_len).map(|_| word(rng)));
    target.push(EOS);
    TrainingExample {
        input: input.into(),
        target: target.into(),
        gold_strategy: gold,
        dialogue_id: "synthetic".into(),
        turn_index: 1,
    }
}

pub fn tiny_lm_config(seed: u64) -> ModelConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    ModelConfig {
        vocab_size: rng.gen_range(14..=20),
        embedding_dim: rng.gen_range(2..=8),
        hidden_dim: rng.gen_range(2..=8),
        encoder_depth: rng.gen_range(1..=2),
        decoder_depth: rng.gen_range(1..=2),
        strategy_count: rng.gen_range(2..=4),
        seed,
    }
}

pub fn tiny_disc_config(seed: u64) -> RecurrentConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd15c);
    RecurrentConfig {
        vocab_size: rng.gen_range(14..=20),
        embedding_dim: rng.gen_range(2..=8),
        hidden_dim: rng.gen_range(2..=8),
        depth: rng.gen_range(1..=2),
        strategy_count: rng.gen_range(2..=4),
        seed,
    }
}

/// Worst relative error between `analytic` and central differences of
/// `loss` over every parameter, with magnitudes floored at `floor`.
pub fn max_relative_error<M, F>(model: &M, analytic: &M, floor: f64, loss: F) -> (f64, String)
where
    M: Parameters<f64> + Clone,
    F: Fn(&M) -> f64,
{
    let base = model.flatten();
    let grad = analytic.flatten();
    let names: Vec<(String, usize)> = model
        .tensors()
        .into_iter()
        .map(|(n, m)| (n, m.as_slice().len()))
        .collect();
    let mut probe = model.clone();
    let mut worst = (0.0, String::new());
    let mut flat = base.clone();
    let mut index = 0;
    for (name, len) in names {
        for k in 0..len {
            let i = index + k;
            flat[i] = base[i] + FD_STEP;
            probe.assign_flat(&flat);
            let up = loss(&probe);
            flat[i] = base[i] - FD_STEP;
            probe.assign_flat(&flat);
            let down = loss(&probe);
            flat[i] = base[i];
            let numeric = (up - down) / (2.0 * FD_STEP);
            let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(floor);
            if rel > worst.0 {
                worst = (
                    rel,
                    format!("{name}[{k}]: analytic {} numeric {numeric}", grad[i]),
                );
            }
        }
        index += len;
    }
    worst
}

/// Overwrites the named tensor (row-major values).
pub fn set_tensor<S: steerdial_core::Scalar, M: Parameters<S>>(
    model: &mut M,
    name: &str,
    values: &[S],
) {
    let specs = model.tensor_specs();
    let mut flat = model.flatten();
    let mut offset = 0;
    for spec in &specs {
        let size = spec.rows * spec.cols;
        if spec.name == name {
            assert_eq!(size, values.len(), "size of {name}");
            flat[offset..offset + size].copy_from_slice(values);
            model.assign_flat(&flat);
            return;
        }
        offset += size;
    }
    panic!("no tensor named {name}");
}

/// Vocabulary of reserved tokens, markers and `w0..w{n}`.
pub fn word_vocab(set: &StrategySet, words: usize) -> steerdial_core::corpus::Vocabulary {
    steerdial_core::corpus::Vocabulary::from_words(set, (0..words).map(|i| format!("w{i}")))
        .unwrap()
}
