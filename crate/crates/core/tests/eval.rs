use std::collections::HashMap;
use std::path::PathBuf;

use proptest::prelude::*;
use steerdial_core::corpus::{tokenize_words, StrategySet};
use steerdial_core::decoding::{write_generations, GenerationRecord};
use steerdial_core::eval::*;
use steerdial_core::Error;

fn toks(s: &str) -> Vec<String> {
    tokenize_words(s)
}

#[test]
fn hand_counted_metric_values() {
    let b1 = bleu_n(&[toks("the the the")], &[toks("the cat")], 1).unwrap();
    assert!((b1 - 1.0 / 3.0).abs() < 1e-9);
    let r = rouge_l(&[toks("a b c d")], &[toks("a c d e")]).unwrap();
    assert!((r - 0.75).abs() < 1e-9);
    let same = vec![toks("we can get through this together .")];
    for n in 1..=4 {
        assert!((bleu_n(&same, &same, n).unwrap() - 1.0).abs() < 1e-9);
    }
    assert!((rouge_l(&same, &same).unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(bleu_n(&[toks("x y")], &[toks("p q")], 1).unwrap(), 0.0);
    assert_eq!(rouge_l(&[toks("x y")], &[toks("p q")]).unwrap(), 0.0);
}

#[test]
fn mismatched_or_bad_inputs_are_rejected() {
    let a = vec![toks("a")];
    let b = vec![toks("a"), toks("b")];
    assert!(matches!(
        bleu_n(&a, &b, 1),
        Err(Error::LengthMismatch { left: 1, right: 2 })
    ));
    assert!(matches!(rouge_l(&a, &b), Err(Error::LengthMismatch { .. })));
    assert!(bleu_n(&a, &a, 0).is_err());
    assert!(bleu_n(&a, &a, 5).is_err());
    let set = StrategySet::default();
    let q = set.lookup("Question").unwrap();
    let r = set.lookup("Restatement or Paraphrasing").unwrap();
    assert_eq!(strategy_accuracy(&[q, q], &[q, q]).unwrap(), 1.0);
    assert_eq!(strategy_accuracy(&[q, q], &[r, r]).unwrap(), 0.0);
    assert_eq!(strategy_accuracy(&[q, r], &[q, q]).unwrap(), 0.5);
    assert!(matches!(
        strategy_accuracy(&[], &[]),
        Err(Error::EmptyInput(_))
    ));
    assert!(matches!(
        strategy_accuracy(&[q], &[q, r]),
        Err(Error::LengthMismatch { .. })
    ));
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn golden_generation_file() {
    // c = 8, r = 10; matched 1..4-grams: 7/8, 3/6, 1/4, 0/2
    // LCS F1 per row: 8/9 and 2/3
    let bp = (1.0f64 - 10.0 / 8.0).exp();
    let expected = [
        7.0 / 8.0 * bp,
        (7.0 / 8.0 * 0.5f64).sqrt() * bp,
        (7.0 / 8.0 * 0.5 * 0.25f64).cbrt() * bp,
        0.0,
    ];
    let report = evaluate_run(
        &fixture("generations_golden.jsonl"),
        &StrategySet::default(),
    )
    .unwrap();
    for (got, want) in report.bleu.iter().zip(expected) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    assert!((report.rouge_l - 7.0 / 9.0).abs() < 1e-9);
    assert_eq!(report.strategy_accuracy, 0.5);
    assert_eq!(report.count, 2);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    report.write_json(&out).unwrap();
    let file: ReportFile = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((file.bleu_2 - 100.0 * expected[1]).abs() < 1e-9);
    assert!((file.rouge_l - 700.0 / 9.0).abs() < 1e-9);
    assert_eq!(file.strategy_accuracy, 0.5);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 7);
    assert!(json.get("bertscore").is_none());
    let again = dir.path().join("again.json");
    evaluate_run(
        &fixture("generations_golden.jsonl"),
        &StrategySet::default(),
    )
    .unwrap()
    .write_json(&again)
    .unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
    assert!(report.table().contains("BLEU-2"));
}

fn record(text: &str, reference: &str) -> GenerationRecord {
    GenerationRecord {
        dialogue_id: "d".into(),
        turn_index: 1,
        strategy_used: "Question".into(),
        text: text.into(),
        reference: reference.into(),
        gold_strategy: "Question".into(),
    }
}

#[test]
fn perfect_generation_file_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.jsonl");
    write_generations(
        &path,
        &[
            record("how are you feeling today ?", "how are you feeling today ?"),
            record("i see , that must be hard .", "i see , that must be hard ."),
        ],
    )
    .unwrap();
    let report = evaluate_run(&path, &StrategySet::default()).unwrap();
    for b in report.bleu {
        assert!((b - 1.0).abs() < 1e-9);
    }
    assert!((report.rouge_l - 1.0).abs() < 1e-9);
    assert_eq!(report.strategy_accuracy, 1.0);
}

#[test]
fn bad_generation_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert!(matches!(
        evaluate_run(&empty, &StrategySet::default()),
        Err(Error::EmptyInput(_))
    ));
    let broken = dir.path().join("broken.jsonl");
    std::fs::write(&broken, "{\"dialogue_id\": 3}\n").unwrap();
    assert!(matches!(
        evaluate_run(&broken, &StrategySet::default()),
        Err(Error::Parse { line: 1, .. })
    ));
    let unknown = dir.path().join("unknown.jsonl");
    let mut r = record("a", "a");
    r.strategy_used = "Humor".into();
    write_generations(&unknown, &[r]).unwrap();
    assert!(matches!(
        evaluate_run(&unknown, &StrategySet::default()),
        Err(Error::Parse { .. })
    ));
}

/// Independent LCS by memoized recursion.
fn lcs_recursive(a: &[u8], b: &[u8], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let key = (a.len(), b.len());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let v = if a[0] == b[0] {
        1 + lcs_recursive(&a[1..], &b[1..], memo)
    } else {
        lcs_recursive(&a[1..], b, memo).max(lcs_recursive(a, &b[1..], memo))
    };
    memo.insert(key, v);
    v
}

fn sentence() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..6, 1..12)
}

fn corpus() -> impl Strategy<Value = Vec<(Vec<u8>, Vec<u8>)>> {
    prop::collection::vec((sentence(), sentence()), 1..8)
}

proptest! {
    #[test]
    fn rouge_matches_independent_lcs(pairs in corpus()) {
        let (c, r): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let mut total = 0.0;
        for (a, b) in &pairs {
            let l = lcs_recursive(a, b, &mut HashMap::new());
            prop_assert_eq!(lcs_len(a, b), l);
            if l > 0 {
                let p = l as f64 / a.len() as f64;
                let rc = l as f64 / b.len() as f64;
                total += 2.0 * p * rc / (p + rc);
            }
        }
        prop_assert_eq!(rouge_l(&c, &r).unwrap(), total / pairs.len() as f64);
    }

    #[test]
    fn metrics_are_bounded_and_order_free(pairs in corpus(), rotate in 0usize..8) {
        let (c, r): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let k = rotate % pairs.len();
        let mut shuffled = pairs.clone();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let (c2, r2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
        for n in 1..=4 {
            let b = bleu_n(&c, &r, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
            prop_assert!((b - bleu_n(&c2, &r2, n).unwrap()).abs() < 1e-12);
        }
        let rl = rouge_l(&c, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&rl));
        prop_assert!((rl - rouge_l(&c2, &r2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bleu_does_not_grow_with_order(
        pairs in prop::collection::vec((prop::sample::subsequence((10u8..30).collect::<Vec<_>>(), 0..8).prop_shuffle(), sentence()), 1..6),
    ) {
        // Candidates never repeat a token, so clipping never binds and every
        // higher-order precision is at most the one below it. A shared
        // 4-gram keeps every precision positive.
        let shared = [0u8, 1, 2, 3];
        let (c, r): (Vec<_>, Vec<_>) = pairs
            .into_iter()
            .map(|(mut a, mut b)| {
                a.extend(shared);
                b.splice(0..0, shared);
                (a, b)
            })
            .unzip();
        let scores: Vec<f64> = (1..=4).map(|n| bleu_n(&c, &r, n).unwrap()).collect();
        for w in scores.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", scores);
            prop_assert!(w[1] > 0.0);
        }
    }
}

#[test]
fn clipping_can_raise_higher_order_scores() {
    // unigrams clip to 4/5 while all four bigrams match
    let c = vec![vec![2u8, 0, 0, 0, 2]];
    let r = vec![vec![0u8, 0, 0, 2, 0]];
    let b1 = bleu_n(&c, &r, 1).unwrap();
    let b2 = bleu_n(&c, &r, 2).unwrap();
    assert!((b1 - 0.8).abs() < 1e-12);
    assert!((b2 - 0.8f64.sqrt()).abs() < 1e-12);
    assert!(b2 > b1);
}
