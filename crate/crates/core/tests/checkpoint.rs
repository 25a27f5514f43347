mod common;

use common::*;
use steerdial_core::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use steerdial_core::corpus::CLS;
use steerdial_core::lm::{ModelConfig, Seq2Seq};
use steerdial_core::nn::Parameters;
use steerdial_core::strategy::{DiscriminatorModel, ExternalClassifier, RecurrentConfig};
use steerdial_core::Error;

fn lm_checkpoint() -> Checkpoint<Seq2Seq<f64>> {
    let set = strategies(3);
    let vocab = word_vocab(&set, 8);
    let model = Seq2Seq::new(ModelConfig {
        vocab_size: vocab.len(),
        embedding_dim: 5,
        hidden_dim: 4,
        encoder_depth: 2,
        decoder_depth: 1,
        strategy_count: 3,
        seed: 21,
    })
    .unwrap();
    Checkpoint::new(model, vocab.to_file(&set))
}

fn disc_config() -> RecurrentConfig {
    RecurrentConfig {
        vocab_size: 17,
        embedding_dim: 3,
        hidden_dim: 4,
        depth: 2,
        strategy_count: 3,
        seed: 8,
    }
}

#[test]
fn round_trip_preserves_parameters_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lm.ckpt");
    let ckpt = lm_checkpoint();
    save_checkpoint(&ckpt, &path).unwrap();
    let back: Checkpoint<Seq2Seq<f64>> = load_checkpoint(&path).unwrap();
    assert_eq!(back, ckpt);
    let bits = |m: &Seq2Seq<f64>| m.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back.model), bits(&ckpt.model));

    let probe = vec![CLS, 10, 11, 12].into();
    let a = ckpt.model.encode(&probe).unwrap();
    let b = back.model.encode(&probe).unwrap();
    assert_eq!(
        ckpt.model.predict_strategy(&a),
        back.model.predict_strategy(&b)
    );
    assert_eq!(std::fs::read(&path).unwrap(), back.to_bytes());
}

#[test]
fn recurrent_models_round_trip() {
    let set = strategies(3);
    let vocab = word_vocab(&set, 8);
    let disc = Checkpoint::new(
        DiscriminatorModel::<f64>::new(disc_config()).unwrap(),
        vocab.to_file(&set),
    );
    let back = Checkpoint::<DiscriminatorModel<f64>>::from_bytes(&disc.to_bytes()).unwrap();
    assert_eq!(back, disc);
    let cls = Checkpoint::new(
        ExternalClassifier::<f64>::new(disc_config()).unwrap(),
        vocab.to_file(&set),
    );
    let back = Checkpoint::<ExternalClassifier<f64>>::from_bytes(&cls.to_bytes()).unwrap();
    assert_eq!(back, cls);
}

#[test]
fn single_precision_round_trip() {
    let set = strategies(3);
    let vocab = word_vocab(&set, 8);
    let disc = Checkpoint::new(
        DiscriminatorModel::<f32>::new(disc_config()).unwrap(),
        vocab.to_file(&set),
    );
    let back = Checkpoint::<DiscriminatorModel<f32>>::from_bytes(&disc.to_bytes()).unwrap();
    assert_eq!(back, disc);
}

fn expect_format(result: Result<Checkpoint<Seq2Seq<f64>>, Error>) -> String {
    match result {
        Err(Error::Format(m)) => m,
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn truncated_files_are_rejected() {
    let bytes = lm_checkpoint().to_bytes();
    for cut in [0, 7, 19, 40, bytes.len() - 1] {
        let msg = expect_format(Checkpoint::from_bytes(&bytes[..cut]));
        assert!(!msg.is_empty());
    }
    let mut longer = bytes.clone();
    longer.push(0);
    expect_format(Checkpoint::from_bytes(&longer));
}

#[test]
fn wrong_magic_or_version_is_rejected() {
    let bytes = lm_checkpoint().to_bytes();
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(expect_format(Checkpoint::from_bytes(&bad)).contains("magic"));
    let mut bad = bytes;
    bad[8..12].copy_from_slice(&2u32.to_le_bytes());
    assert!(expect_format(Checkpoint::from_bytes(&bad)).contains("version"));
}

#[test]
fn model_kind_is_checked() {
    let set = strategies(3);
    let vocab = word_vocab(&set, 8);
    let disc = Checkpoint::new(
        DiscriminatorModel::<f64>::new(disc_config()).unwrap(),
        vocab.to_file(&set),
    );
    assert!(matches!(
        Checkpoint::<ExternalClassifier<f64>>::from_bytes(&disc.to_bytes()),
        Err(Error::Format(_))
    ));
}

#[test]
fn vocabulary_mismatch_is_a_config_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lm.ckpt");
    lm_checkpoint().save(&path).unwrap();
    let set = strategies(3);
    let same = word_vocab(&set, 8);
    assert!(Checkpoint::<Seq2Seq<f64>>::load_for(&path, &same).is_ok());
    let bigger = word_vocab(&set, 9);
    assert!(matches!(
        Checkpoint::<Seq2Seq<f64>>::load_for(&path, &bigger),
        Err(Error::ConfigMismatch(_))
    ));
    let renamed =
        steerdial_core::corpus::Vocabulary::from_words(&set, (0..8).map(|i| format!("v{i}")))
            .unwrap();
    assert!(matches!(
        Checkpoint::<Seq2Seq<f64>>::load_for(&path, &renamed),
        Err(Error::ConfigMismatch(_))
    ));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        Checkpoint::<Seq2Seq<f64>>::load(&dir.path().join("absent.ckpt")),
        Err(Error::Io { .. })
    ));
}
