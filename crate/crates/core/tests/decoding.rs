mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steerdial_core::corpus::{
    Dialogue, SpeakerRole, StrategySet, TokenSequence, Utterance, Vocabulary, CLS,
};
use steerdial_core::decoding::*;
use steerdial_core::dist::Categorical;
use steerdial_core::lm::{train_lm, ModelConfig, Seq2Seq, TrainingConfig, TrainingMode};
use steerdial_core::nn::Schedule;
use steerdial_core::strategy::{DiscriminatorModel, RecurrentConfig, StrategySource};

const STRATEGIES: usize = 4;

fn setup(seed: u64) -> (StrategySet, Vocabulary, Seq2Seq<f64>) {
    let set = strategies(STRATEGIES);
    let vocab = word_vocab(&set, 14);
    let lm = Seq2Seq::new(ModelConfig {
        vocab_size: vocab.len(),
        embedding_dim: 6,
        hidden_dim: 6,
        encoder_depth: 1,
        decoder_depth: 1,
        strategy_count: STRATEGIES,
        seed,
    })
    .unwrap();
    (set, vocab, lm)
}

fn random_disc(vocab_size: usize, seed: u64) -> DiscriminatorModel<f64> {
    DiscriminatorModel::new(RecurrentConfig {
        vocab_size,
        embedding_dim: 5,
        hidden_dim: 5,
        depth: 1,
        strategy_count: STRATEGIES,
        seed,
    })
    .unwrap()
}

fn random_history(rng: &mut ChaCha8Rng, vocab: &Vocabulary) -> TokenSequence {
    let lo = vocab.special_count() as u32;
    let mut ids = vec![CLS];
    ids.extend((0..rng.gen_range(1..6)).map(|_| rng.gen_range(lo..vocab.len() as u32)));
    ids.into()
}

#[test]
fn fudge_with_zero_lambda_over_full_vocabulary_is_identity() {
    let (set, vocab, lm) = setup(1);
    let disc = random_disc(vocab.len(), 2);
    let ctx = lm.encode(&vec![CLS, 12, 13].into()).unwrap();
    let lm_dist = lm
        .next_token_distribution(&ctx, &vec![vocab.marker_id(set.label(1).unwrap())].into())
        .unwrap();
    let out = fudge_rescore(
        &lm_dist,
        &vec![11, 15].into(),
        set.label(1).unwrap(),
        &disc,
        vocab.len(),
        0.0,
    )
    .unwrap();
    for (a, b) in out.probs().iter().zip(lm_dist.probs()) {
        assert!((a - b).abs() < 1e-9);
    }
}

/// Discriminator over two strategies whose prediction after token 6 is
/// `p(s0) = 0.9` and after token 7 is `p(s0) = 0.1`.
fn two_token_disc() -> DiscriminatorModel<f64> {
    let mut d = DiscriminatorModel::<f64>::zeros(RecurrentConfig {
        vocab_size: 10,
        embedding_dim: 1,
        hidden_dim: 1,
        depth: 1,
        strategy_count: 2,
        seed: 0,
    })
    .unwrap();
    let mut table = vec![0.0; 10];
    table[6] = 1.0;
    table[7] = -1.0;
    set_tensor(&mut d, "embedding", &table);
    // gates [i, f, g, o] by columns [x, h]: cell takes tanh(x), both gates open
    set_tensor(
        &mut d,
        "lstm.0.weight",
        &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    );
    set_tensor(&mut d, "lstm.0.bias", &[40.0, 0.0, 0.0, 40.0]);
    let h = 1f64.tanh().tanh();
    set_tensor(&mut d, "head.weight", &[9f64.ln() / h, 0.0]);
    d
}

#[test]
fn fudge_reweights_two_candidates_by_hand_arithmetic() {
    let disc = two_token_disc();
    let mut probs = vec![0.0; 10];
    probs[6] = 0.5;
    probs[7] = 0.5;
    let lm_dist = Categorical::from_probs(probs);
    let s0 = strategies(2).label(0).unwrap();
    let out = fudge_rescore(&lm_dist, &TokenSequence::default(), s0, &disc, 2, 1.0).unwrap();
    assert!((out.prob(6) - 0.9).abs() < 1e-12, "{}", out.prob(6));
    assert!((out.prob(7) - 0.1).abs() < 1e-12);
    assert!((out.sum() - 1.0).abs() < 1e-12);
}

#[test]
fn uniform_discriminator_only_restricts_and_renormalizes() {
    let (set, vocab, lm) = setup(3);
    let disc = DiscriminatorModel::zeros(RecurrentConfig {
        vocab_size: vocab.len(),
        embedding_dim: 3,
        hidden_dim: 3,
        depth: 1,
        strategy_count: STRATEGIES,
        seed: 0,
    })
    .unwrap();
    let ctx = lm.encode(&vec![CLS, 14].into()).unwrap();
    let lm_dist = lm
        .next_token_distribution(&ctx, &vec![vocab.marker_id(set.label(2).unwrap())].into())
        .unwrap();
    for lambda in [0.0, 0.5, 1.0, 4.0] {
        let k = 5;
        let out = fudge_rescore(
            &lm_dist,
            &vec![13].into(),
            set.label(2).unwrap(),
            &disc,
            k,
            lambda,
        )
        .unwrap();
        let top = top_candidates(&lm_dist, k);
        let mass: f64 = top.iter().map(|&c| lm_dist.prob(c as usize)).sum();
        for id in 0..vocab.len() {
            let expected = if top.contains(&(id as u32)) {
                lm_dist.prob(id) / mass
            } else {
                0.0
            };
            assert!((out.prob(id) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn rescored_support_stays_within_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (set, vocab, lm) = setup(4);
    for case in 0..30 {
        let disc = random_disc(vocab.len(), case);
        let ctx = lm.encode(&random_history(&mut rng, &vocab)).unwrap();
        let strategy = set.label(rng.gen_range(0..STRATEGIES)).unwrap();
        let lm_dist = lm
            .next_token_distribution(&ctx, &vec![vocab.marker_id(strategy)].into())
            .unwrap();
        let k = rng.gen_range(1..=vocab.len());
        let lambda = rng.gen_range(0.0..6.0);
        let prefix: Vec<u32> = (0..rng.gen_range(0..4))
            .map(|_| rng.gen_range(10..24))
            .collect();
        let out = fudge_rescore(&lm_dist, &prefix.into(), strategy, &disc, k, lambda).unwrap();
        assert!(out.is_valid(1e-6));
        let top = top_candidates(&lm_dist, k);
        assert_eq!(top.len(), k);
        for id in 0..vocab.len() {
            if !top.contains(&(id as u32)) {
                assert_eq!(out.prob(id), 0.0);
            }
        }
    }
}

#[test]
fn candidate_ties_go_to_lowest_id() {
    let d = Categorical::<f64>::from_probs(vec![0.1, 0.3, 0.3, 0.0, 0.3]);
    assert_eq!(top_candidates(&d, 2), vec![1, 2]);
    assert_eq!(top_candidates(&d, 9), vec![1, 2, 4, 0, 3]);
}

#[test]
fn zero_lambda_full_candidates_matches_plain_decoding() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (set, vocab, lm) = setup(6);
    let disc = random_disc(vocab.len(), 8);
    for mode in [DecodingMode::Greedy, DecodingMode::TopKSample] {
        for seed in 0..10 {
            let cfg = DecodingConfig {
                mode,
                lambda: 0.0,
                fudge_candidates: vocab.len(),
                max_length: 12,
                seed,
                ..DecodingConfig::default()
            };
            let ctx = lm.encode(&random_history(&mut rng, &vocab)).unwrap();
            let strategy = set.label(seed as usize % STRATEGIES).unwrap();
            let plain = decode_utterance(&ctx, strategy, &lm, &vocab, None, &cfg, false).unwrap();
            let steered =
                decode_utterance(&ctx, strategy, &lm, &vocab, Some(&disc), &cfg, false).unwrap();
            assert_eq!(plain, steered);
        }
    }
}

#[test]
fn overfit_model_reproduces_its_target_greedily() {
    let (set, vocab, lm) = setup(7);
    let strategy = set.label(3).unwrap();
    let response = vec![12u32, 17, 12, 20];
    let mut target = vec![vocab.marker_id(strategy)];
    target.extend(&response);
    target.push(steerdial_core::corpus::EOS);
    let example = steerdial_core::corpus::TrainingExample {
        input: vec![CLS, 14, 15, 16].into(),
        target: target.into(),
        gold_strategy: strategy,
        dialogue_id: "d".into(),
        turn_index: 1,
    };
    let cfg = TrainingConfig {
        alpha: 1.0,
        schedule: Schedule {
            learning_rate: 0.5,
            epochs: 200,
            batch_size: 1,
            ..Schedule::default()
        },
    };
    let trained = train_lm(
        lm,
        std::slice::from_ref(&example),
        &cfg,
        TrainingMode::GenerationOnly,
    )
    .unwrap();
    let ctx = trained.model.encode(&example.input).unwrap();
    let out = decode_utterance(
        &ctx,
        strategy,
        &trained.model,
        &vocab,
        None,
        &DecodingConfig::default(),
        true,
    )
    .unwrap();
    assert_eq!(out.tokens.ids(), &response[..]);
    assert_eq!(out.strategy_used, strategy);
    let log = out.per_step_log.unwrap();
    assert_eq!(log.len(), response.len() + 1);
    assert!(log.iter().all(|s| s.disc_probs.is_empty()));
}

/// Keyword `10 + s` latches hidden unit `s`; the head then reports `s`
/// with probability close to 1, and uniform before any keyword.
fn keyword_disc(vocab_size: usize) -> DiscriminatorModel<f64> {
    let n = STRATEGIES;
    let mut d = DiscriminatorModel::<f64>::zeros(RecurrentConfig {
        vocab_size,
        embedding_dim: n,
        hidden_dim: n,
        depth: 1,
        strategy_count: n,
        seed: 0,
    })
    .unwrap();
    let mut table = vec![0.0; vocab_size * n];
    for s in 0..n {
        table[(10 + s) * n + s] = 1.0;
    }
    set_tensor(&mut d, "embedding", &table);
    let mut weight = vec![0.0; 4 * n * 2 * n];
    for s in 0..n {
        weight[(2 * n + s) * 2 * n + s] = 40.0;
    }
    set_tensor(&mut d, "lstm.0.weight", &weight);
    let mut bias = vec![40.0; 4 * n];
    bias[2 * n..3 * n].iter_mut().for_each(|b| *b = 0.0);
    set_tensor(&mut d, "lstm.0.bias", &bias);
    let mut head = vec![0.0; n * n];
    for s in 0..n {
        head[s * n + s] = 30.0;
    }
    set_tensor(&mut d, "head.weight", &head);
    d
}

#[test]
fn strong_control_emits_the_strategy_keyword() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (set, vocab, lm) = setup(10);
    let disc = keyword_disc(vocab.len());
    let cfg = DecodingConfig {
        lambda: 8.0,
        fudge_candidates: vocab.len(),
        max_length: 6,
        ..DecodingConfig::default()
    };
    for _ in 0..10 {
        let ctx = lm.encode(&random_history(&mut rng, &vocab)).unwrap();
        for strategy in set.labels() {
            let keyword = 10 + strategy.index() as u32;
            let out =
                decode_utterance(&ctx, strategy, &lm, &vocab, Some(&disc), &cfg, true).unwrap();
            assert!(
                out.tokens.ids().contains(&keyword),
                "{:?} lacks {keyword}",
                out.tokens
            );
            for step in out.per_step_log.unwrap() {
                assert_eq!(step.candidates.len(), vocab.len());
                assert!((step.final_probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn max_length_caps_the_response() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (set, vocab, lm) = setup(11);
    let disc = random_disc(vocab.len(), 1);
    let cfg = DecodingConfig {
        max_length: 1,
        mode: DecodingMode::TopKSample,
        ..DecodingConfig::default()
    };
    for seed in 0..20 {
        let ctx = lm.encode(&random_history(&mut rng, &vocab)).unwrap();
        let cfg = DecodingConfig {
            seed,
            ..cfg.clone()
        };
        let s = set.label(1).unwrap();
        assert!(
            decode_utterance(&ctx, s, &lm, &vocab, None, &cfg, false)
                .unwrap()
                .tokens
                .len()
                <= 1
        );
        assert!(
            decode_utterance(&ctx, s, &lm, &vocab, Some(&disc), &cfg, false)
                .unwrap()
                .tokens
                .len()
                <= 1
        );
    }
}

#[test]
fn greedy_decoding_ignores_the_seed() {
    let (set, vocab, lm) = setup(12);
    let disc = random_disc(vocab.len(), 3);
    let ctx = lm.encode(&vec![CLS, 15, 16, 17].into()).unwrap();
    let s = set.label(2).unwrap();
    let run = |seed| {
        let cfg = DecodingConfig {
            seed,
            max_length: 10,
            ..DecodingConfig::default()
        };
        decode_utterance(&ctx, s, &lm, &vocab, Some(&disc), &cfg, false).unwrap()
    };
    let first = run(0);
    for seed in 1..10 {
        assert_eq!(run(seed), first);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        DecodingConfig {
            fudge_candidates: 0,
            ..DecodingConfig::default()
        },
        DecodingConfig {
            sample_k: 0,
            ..DecodingConfig::default()
        },
        DecodingConfig {
            max_length: 0,
            ..DecodingConfig::default()
        },
        DecodingConfig {
            lambda: -1.0,
            ..DecodingConfig::default()
        },
        DecodingConfig {
            lambda: f64::NAN,
            ..DecodingConfig::default()
        },
    ] {
        assert!(cfg.validate().is_err());
    }
}

fn dialogues(set: &StrategySet) -> Vec<Dialogue> {
    let turn = |role, text: &str, s: Option<usize>| Utterance {
        role,
        text: text.into(),
        strategy: s.map(|i| set.label(i).unwrap()),
    };
    vec![
        Dialogue {
            id: "a".into(),
            situation: "w0 w1".into(),
            utterances: vec![
                turn(SpeakerRole::Seeker, "w2 w3", None),
                turn(SpeakerRole::Helper, "w4 w5", Some(2)),
            ],
        },
        Dialogue {
            id: "b".into(),
            situation: "w6".into(),
            utterances: vec![
                turn(SpeakerRole::Seeker, "w7", None),
                turn(SpeakerRole::Helper, "w8 w9", Some(0)),
                turn(SpeakerRole::Seeker, "w10", None),
            ],
        },
    ]
}

#[test]
fn batch_generation_with_oracle_strategies() {
    let (set, vocab, lm) = setup(13);
    let data = dialogues(&set);
    let disc = random_disc(vocab.len(), 4);
    let cfg = DecodingConfig {
        mode: DecodingMode::TopKSample,
        max_length: 8,
        seed: 3,
        ..DecodingConfig::default()
    };
    let run = || {
        batch_generate(
            &data,
            None,
            &vocab,
            &StrategySource::Oracle,
            &lm,
            Some(&disc),
            &cfg,
        )
        .unwrap()
    };
    let out = run();
    assert_eq!(out.len(), 2);
    assert_eq!(out, run());
    for turn in &out {
        assert_eq!(turn.result.strategy_used, turn.gold_strategy);
    }
    assert_eq!(out[0].reference, "w4 w5");
    assert_eq!((out[1].dialogue_id.as_str(), out[1].turn_index), ("b", 1));

    let records: Vec<_> = out.iter().map(|t| t.to_record(&vocab, &set)).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.jsonl");
    write_generations(&path, &records).unwrap();
    assert_eq!(read_generations(&path).unwrap(), records);
    let bytes = std::fs::read(&path).unwrap();
    write_generations(&path, &records).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
}

#[test]
fn batch_generation_with_joint_head_uses_its_argmax() {
    let (set, vocab, mut lm) = setup(14);
    lm.zero_strategy_head();
    let data = dialogues(&set);
    let cfg = DecodingConfig {
        max_length: 4,
        ..DecodingConfig::default()
    };
    let out = batch_generate(
        &data,
        None,
        &vocab,
        &StrategySource::JointHead(&lm),
        &lm,
        None,
        &cfg,
    )
    .unwrap();
    assert!(out.iter().all(|t| t.result.strategy_used.index() == 0));
}

#[test]
fn batch_errors_name_the_dialogue() {
    let (set, vocab, lm) = setup(15);
    let data = dialogues(&set);
    let small = random_disc(8, 0);
    let cfg = DecodingConfig {
        max_length: 4,
        ..DecodingConfig::default()
    };
    let err = batch_generate(
        &data,
        None,
        &vocab,
        &StrategySource::Oracle,
        &lm,
        Some(&small),
        &cfg,
    )
    .unwrap_err();
    assert!(
        matches!(err, steerdial_core::Error::InDialogue { ref dialogue_id, .. } if dialogue_id == "a"),
        "{err}"
    );
}
