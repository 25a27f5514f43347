mod common;

use proptest::prelude::*;
use steerdial_core::corpus::*;

const WORDS: [&str; 8] = ["i", "feel", "so", "tired", "why", "?", "maybe", "rest"];

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()), 1..6).prop_map(|w| w.join(" "))
}

fn utterance(strategies: usize) -> impl Strategy<Value = (bool, usize, String)> {
    (any::<bool>(), 0..strategies, text())
}

fn dialogues() -> impl Strategy<Value = Vec<Dialogue>> {
    let set = StrategySet::default();
    prop::collection::vec((text(), prop::collection::vec(utterance(8), 1..7)), 1..5).prop_map(
        move |ds| {
            ds.into_iter()
                .enumerate()
                .map(|(i, (situation, us))| Dialogue {
                    id: format!("d{i}"),
                    situation,
                    utterances: us
                        .into_iter()
                        .map(|(helper, s, text)| Utterance {
                            role: if helper {
                                SpeakerRole::Helper
                            } else {
                                SpeakerRole::Seeker
                            },
                            text,
                            strategy: helper.then(|| set.label(s).unwrap()),
                        })
                        .collect(),
                })
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn datasets_round_trip_through_files(data in dialogues()) {
        let set = StrategySet::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        write_dataset(&path, &data, &set).unwrap();
        prop_assert_eq!(load_dataset(&path, &set).unwrap(), data);
    }

    #[test]
    fn examples_follow_the_layout(data in dialogues()) {
        let set = StrategySet::default();
        let vocab = build_vocabulary(&data, &set, 1).unwrap();
        for d in &data {
            let examples = build_examples(d, &vocab, None);
            prop_assert_eq!(examples.len(), d.helper_turns().count());
            for (ex, (turn, u)) in examples.iter().zip(d.helper_turns()) {
                prop_assert_eq!(ex.turn_index, turn);
                prop_assert_eq!(Some(ex.gold_strategy), u.strategy);
                let target = ex.target.ids();
                prop_assert_eq!(target[0], vocab.marker_id(ex.gold_strategy));
                prop_assert_eq!(*target.last().unwrap(), EOS);
                let expected = u.tokens(&vocab);
                prop_assert_eq!(ex.response(), expected.ids());
                prop_assert!(target[1..].iter().all(|&t| !vocab.is_marker(t)));
                prop_assert_eq!(ex.input.ids()[0], CLS);
                prop_assert!(ex.input.ids().iter().all(|&t| !vocab.is_marker(t) && t != UNK));
                // one separator per earlier utterance
                let seps = ex.input.ids().iter().filter(|&&t| t == SEP).count();
                prop_assert_eq!(seps, turn);
            }
            prop_assert_eq!(build_examples(d, &vocab, None), examples);
        }
    }

    #[test]
    fn tokenization_is_pure_and_lowercase(s in "[A-Za-z ,.?!']{0,40}") {
        let a = tokenize_words(&s);
        prop_assert_eq!(&a, &tokenize_words(&s));
        prop_assert!(a.iter().all(|w| !w.is_empty() && !w.contains(' ')));
        prop_assert!(a.iter().all(|w| w.to_lowercase() == *w));
        let squeezed: String = s.split_whitespace().collect::<String>().to_lowercase();
        prop_assert_eq!(a.concat(), squeezed);
    }

    #[test]
    fn vocabulary_files_round_trip(data in dialogues()) {
        let set = StrategySet::default();
        let vocab = build_vocabulary(&data, &set, 1).unwrap();
        let file = vocab.to_file(&set);
        let json = serde_json::to_string(&file).unwrap();
        let back = Vocabulary::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        prop_assert_eq!(back, vocab);
    }
}

#[test]
fn knowledge_is_appended_after_a_separator() {
    let set = StrategySet::default();
    let d = Dialogue {
        id: "k".into(),
        situation: "work".into(),
        utterances: vec![
            Utterance {
                role: SpeakerRole::Seeker,
                text: "i failed".into(),
                strategy: None,
            },
            Utterance {
                role: SpeakerRole::Helper,
                text: "why ?".into(),
                strategy: set.lookup("Question"),
            },
            Utterance {
                role: SpeakerRole::Seeker,
                text: "tired".into(),
                strategy: None,
            },
            Utterance {
                role: SpeakerRole::Helper,
                text: "rest".into(),
                strategy: set.lookup("Self-disclosure"),
            },
        ],
    };
    let knowledge = vec![
        vec!["PersonX feels sad.".to_string()],
        vec![],
        vec![
            "PersonX feels tired.".to_string(),
            "PersonX wants sleep.".to_string(),
        ],
        vec![],
    ];
    let mut builder = VocabularyBuilder::new();
    builder.add_dialogue(&d);
    knowledge.iter().flatten().for_each(|s| builder.add_text(s));
    let vocab = builder.build(&set, 1).unwrap();
    let words = |ids: &[u32]| vocab.decode(&ids.to_vec().into()).join(" ");

    let latest = build_examples(
        &d,
        &vocab,
        Some(Knowledge {
            per_utterance: &knowledge,
            scope: KnowledgeScope::LatestSeeker,
        }),
    );
    assert_eq!(
        words(latest[1].input.ids()),
        "<cls> work <sep> i failed <sep> why ? <sep> tired <sep> personx feels tired . personx wants sleep ."
    );
    assert_eq!(
        words(latest[0].input.ids()),
        "<cls> work <sep> i failed <sep> personx feels sad ."
    );

    let all = build_examples(
        &d,
        &vocab,
        Some(Knowledge {
            per_utterance: &knowledge,
            scope: KnowledgeScope::AllPreceding,
        }),
    );
    assert!(words(all[1].input.ids())
        .ends_with("<sep> personx feels sad . personx feels tired . personx wants sleep ."));
    assert_eq!(
        words(latest[1].target.ids()),
        "[Self-disclosure] rest <eos>"
    );
}

#[test]
fn invalid_records_are_reported_with_context() {
    let set = StrategySet::default();
    let path = std::path::Path::new("mem.jsonl");
    let bad_strategy = r#"{"id":"x","situation":"s","utterances":[{"role":"helper","text":"t","strategy":"Humor"}]}"#;
    assert!(matches!(
        parse_dataset(bad_strategy, path, &set),
        Err(steerdial_core::Error::Validation { ref dialogue_id, utterance: 0, .. }) if dialogue_id == "x"
    ));
    let garbage = "\n\n{not json";
    assert!(matches!(
        parse_dataset(garbage, path, &set),
        Err(steerdial_core::Error::Parse { line: 3, .. })
    ));
    assert!(matches!(
        build_vocabulary(&[], &set, 1),
        Err(steerdial_core::Error::EmptyCorpus)
    ));
}
