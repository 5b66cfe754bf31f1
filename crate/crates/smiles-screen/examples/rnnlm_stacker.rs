//! Generative classification: fit one language model per class, then let a
//! logistic stacker decide from the two log likelihoods.

use smiles_screen::features::{symbol_encode, symbol_transform, SymbolStride, Vocabulary};
use smiles_screen::harness::{accuracy, log_loss, stratified_folds_from_labels};
use smiles_screen::neural::{lm_fit, rnnlm_classify_fit, LmConfig, TrainConfig};
use smiles_screen::synthetic::planted_motif_dataset;

fn main() {
    let dataset = planted_motif_dataset("rnnlm-demo", 240, 5);
    let labels = dataset.labels();
    let plan = stratified_folds_from_labels(&labels, 4, 5).unwrap();
    let test_idx = plan.fold_indices(0);
    let train_idx = plan.complement_indices(0);

    let mut vocab = Vocabulary::new();
    for &i in &train_idx {
        symbol_encode(&dataset.records()[i].smiles, SymbolStride::One, &mut vocab);
    }
    vocab.freeze();
    let encode =
        |i: usize| symbol_transform(&dataset.records()[i].smiles, SymbolStride::One, &vocab).symbols;

    let actives: Vec<Vec<u32>> = train_idx.iter().filter(|&&i| labels[i] == 1).map(|&i| encode(i)).collect();
    let inactives: Vec<Vec<u32>> = train_idx.iter().filter(|&&i| labels[i] == 0).map(|&i| encode(i)).collect();
    println!("{} active / {} inactive training sequences", actives.len(), inactives.len());

    let lm_cfg = LmConfig { embed_dim: 12, hidden: 16 };
    let train_cfg = TrainConfig {
        learning_rate: 3e-3,
        epochs: 30,
        patience: 6,
        batch_size: 16,
        seed: 5,
        ..TrainConfig::default()
    };
    let lm_active = lm_fit(&actives, vocab.len(), lm_cfg, &train_cfg).unwrap();
    let lm_inactive = lm_fit(&inactives, vocab.len(), lm_cfg, &train_cfg).unwrap();

    // one concrete molecule: the active LM should like actives better
    let sample = encode(train_idx[0]);
    println!(
        "loglik under active LM {:.1}, under inactive LM {:.1} (label {})",
        lm_active.loglik(&sample),
        lm_inactive.loglik(&sample),
        labels[train_idx[0]]
    );

    let labeled: Vec<(Vec<u32>, u8)> = train_idx.iter().map(|&i| (encode(i), labels[i])).collect();
    let stacker = rnnlm_classify_fit(lm_active, lm_inactive, &labeled).unwrap();

    let probs: Vec<f64> = test_idx.iter().map(|&i| stacker.predict_proba_seq(&encode(i))).collect();
    let ys: Vec<u8> = test_idx.iter().map(|&i| labels[i]).collect();
    println!(
        "held-out log loss {:.4}, accuracy {:.3}",
        log_loss(&probs, &ys).unwrap(),
        accuracy(&probs, &ys).unwrap()
    );
}
