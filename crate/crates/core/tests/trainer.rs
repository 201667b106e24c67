use sctc_core::inventory::{Attribute, AttributeTable};
use sctc_core::toy::{
    self, read_corpus_dir, write_corpus_dir, CorpusConfig, LinearModel, SyntheticCorpus,
    TrainConfig,
};
use sctc_core::Matrix;

fn small_corpus(n: usize) -> SyntheticCorpus {
    SyntheticCorpus::generate(CorpusConfig {
        n_utterances: n,
        ..CorpusConfig::default()
    })
    .unwrap()
}

#[test]
fn training_is_reproducible() {
    let corpus = small_corpus(24);
    let table = AttributeTable::shipped();
    let config = TrainConfig {
        epochs: 3,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let a = toy::train(&corpus.utterances, &table, &config).unwrap();
    let b = toy::train(&corpus.utterances, &table, &config).unwrap();
    assert_eq!(a.model.parameters(), b.model.parameters());
    assert_eq!(a.epoch_losses, b.epoch_losses);

    let c = toy::train(
        &corpus.utterances,
        &table,
        &TrainConfig { seed: 7, ..config },
    )
    .unwrap();
    assert_ne!(a.model.parameters(), c.model.parameters());
}

#[test]
fn zero_learning_rate_changes_nothing() {
    let corpus = small_corpus(10);
    let table = AttributeTable::shipped();
    let config = TrainConfig {
        learning_rate: 0.0,
        epochs: 4,
        batch_size: 3,
        ..TrainConfig::default()
    };
    let out = toy::train(&corpus.utterances, &table, &config).unwrap();
    let init = LinearModel::random(64, 71, config.init_scale, config.seed);
    assert_eq!(out.model, init);
    let first = out.epoch_losses[0];
    for l in &out.epoch_losses {
        // only the summation order differs between epochs
        assert!((l - first).abs() <= 1e-9 * first, "{l} vs {first}");
    }
}

#[test]
fn one_small_step_does_not_increase_the_loss() {
    let table = AttributeTable::shipped();
    let corpus = small_corpus(5);
    for u in &corpus.utterances {
        let one = std::slice::from_ref(u);
        let config = TrainConfig {
            learning_rate: 1e-3,
            epochs: 1,
            batch_size: 1,
            warmup_fraction: 0.0,
            ..TrainConfig::default()
        };
        let before = toy::mean_loss(
            &LinearModel::random(64, 71, config.init_scale, config.seed),
            one,
            &table,
        )
        .unwrap();
        let out = toy::train(one, &table, &config).unwrap();
        let after = toy::mean_loss(&out.model, one, &table).unwrap();
        assert!(after <= before, "{after} > {before}");
    }
}

#[test]
fn default_config_makes_progress() {
    let table = AttributeTable::shipped();
    let corpus = SyntheticCorpus::generate(CorpusConfig::default()).unwrap();
    let out = toy::train(&corpus.utterances, &table, &TrainConfig::default()).unwrap();
    assert_eq!(out.epoch_losses.len(), 30);
    assert!(out.epoch_losses[0] > out.epoch_losses[29]);

    let summary = toy::evaluate(&out.model, &corpus.sample(50, 99), &table).unwrap();
    assert_eq!(summary.per_attribute.len(), 35);
    assert!(summary.mean_aer < 5.0, "{}", summary.to_text());
}

#[test]
fn oracle_logits_score_perfectly() {
    let table = AttributeTable::shipped();
    let corpus = small_corpus(20);
    let logits: Vec<Matrix> = corpus
        .utterances
        .iter()
        .map(|u| {
            let mut rows = vec![blank_row()];
            for p in &u.phonemes {
                let sig = table.signature(*p);
                let mut row = vec![0.0; 71];
                for a in Attribute::all() {
                    row[if sig.get(a) {
                        a.index()
                    } else {
                        35 + a.index()
                    }] = 10.0;
                }
                rows.push(row);
                rows.push(blank_row());
            }
            Matrix::from_rows(&rows).unwrap()
        })
        .collect();
    let summary = toy::evaluate_logits(&logits, &corpus.utterances, &table).unwrap();
    assert_eq!(summary.mean_aer, 0.0);
    assert!(summary
        .per_attribute
        .iter()
        .all(|s| s.aer == 0.0 && s.accuracy == 100.0));
}

fn blank_row() -> Vec<f64> {
    let mut r = vec![0.0; 71];
    r[70] = 10.0;
    r
}

#[test]
fn untrained_model_is_reported() {
    let table = AttributeTable::shipped();
    let corpus = small_corpus(5);
    let model = LinearModel::random(64, 71, 0.01, 3);
    let summary = toy::evaluate(&model, &corpus.utterances, &table).unwrap();
    assert_eq!(summary.per_attribute.len(), 35);
    assert!(summary.to_text().contains("mean AER"));
}

#[test]
fn evaluation_rejects_wrong_width() {
    let table = AttributeTable::shipped();
    let corpus = small_corpus(2);
    let model = LinearModel::zeros(64, 40);
    assert!(matches!(
        toy::evaluate(&model, &corpus.utterances, &table),
        Err(sctc_core::Error::DimensionMismatch(_))
    ));
}

#[test]
fn corpus_and_checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(4);
    write_corpus_dir(dir.path(), &corpus.utterances).unwrap();
    assert_eq!(read_corpus_dir(dir.path()).unwrap(), corpus.utterances);

    let model = LinearModel::random(64, 71, 0.5, 11);
    assert_eq!(
        LinearModel::from_checkpoint(&model.to_checkpoint()).unwrap(),
        model
    );
}
