//! Train the region-based CNN on the planted-motif corpus and watch the
//! walk-averaged predictions beat the single-walk ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smiles_screen::augment::AugmentConfig;
use smiles_screen::features::{symbol_encode, SymbolStride, Vocabulary};
use smiles_screen::harness::{accuracy, log_loss, stratified_folds_from_labels, ParsedDataset};
use smiles_screen::neural::{
    predict_averaged, train_sequence_classifier, CnnConfig, CnnModel, TrainConfig, TrainSample,
};
use smiles_screen::augment::enumerate_smiles;
use smiles_screen::synthetic::planted_motif_dataset;

fn main() {
    let parsed = ParsedDataset::from_dataset(planted_motif_dataset("cnn-demo", 400, 9));
    let labels = parsed.dataset.labels();
    let plan = stratified_folds_from_labels(&labels, 5, 9).unwrap();
    let test_idx = plan.fold_indices(0);
    let train_idx = plan.complement_indices(0);

    // symbol vocabulary from training canonical strings plus sampled walks
    let mut vocab = Vocabulary::new();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for &i in &train_idx {
        symbol_encode(&parsed.dataset.records()[i].smiles, SymbolStride::One, &mut vocab);
        for s in enumerate_smiles(&parsed.molecules[i], 5, &mut rng).unwrap() {
            symbol_encode(&s, SymbolStride::One, &mut vocab);
        }
    }
    vocab.freeze();

    let samples: Vec<TrainSample> = train_idx
        .iter()
        .map(|&i| TrainSample {
            molecule: &parsed.molecules[i],
            label: labels[i],
        })
        .collect();
    let mut model = CnnModel::init(
        CnnConfig::new(vocab.len(), vec![5, 3], 32),
        &mut ChaCha8Rng::seed_from_u64(42),
    );
    let cfg = TrainConfig {
        epochs: 30,
        patience: 5,
        seed: 42,
        ..TrainConfig::default()
    };
    let augment = AugmentConfig::new(5, 20, 42);
    let outcome =
        train_sequence_classifier(&mut model, &samples, &vocab, SymbolStride::One, &cfg, &augment)
            .unwrap();
    println!(
        "trained for {} epochs (best {}), validation log loss {:.4}",
        outcome.epochs_run,
        outcome.best_epoch,
        outcome.val_history[outcome.best_epoch]
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut averaged, mut single, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for &i in &test_idx {
        let p = predict_averaged(
            &model,
            &parsed.molecules[i],
            &vocab,
            SymbolStride::One,
            augment.predict_walks_per_molecule,
            &mut rng,
        )
        .unwrap();
        averaged.push(p.mean);
        single.push(p.first);
        ys.push(labels[i]);
    }
    println!(
        "held-out: averaged over 20 walks  log loss {:.4}, accuracy {:.3}",
        log_loss(&averaged, &ys).unwrap(),
        accuracy(&averaged, &ys).unwrap()
    );
    println!(
        "held-out: single walk             log loss {:.4}, accuracy {:.3}",
        log_loss(&single, &ys).unwrap(),
        accuracy(&single, &ys).unwrap()
    );
}
