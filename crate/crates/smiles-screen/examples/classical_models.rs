//! Naive Bayes against the random forest on one split: both learn the
//! planted motif, but their probability calibration differs sharply, which
//! is exactly what the log-loss metric surfaces.

use smiles_screen::features::{ngram_featurize, ngram_transform, tokenize, FeatureMode, NGramConfig, Vocabulary};
use smiles_screen::harness::{accuracy, log_loss, stratified_folds_from_labels};
use smiles_screen::models::{nb_fit, rf_fit, ForestParams, ProbClassifier};
use smiles_screen::synthetic::planted_motif_dataset;

fn main() {
    let dataset = planted_motif_dataset("classical-demo", 300, 3);
    let labels = dataset.labels();
    let plan = stratified_folds_from_labels(&labels, 5, 3).unwrap();
    let test_idx = plan.fold_indices(0);
    let train_idx = plan.complement_indices(0);
    let train_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
    let test_labels: Vec<u8> = test_idx.iter().map(|&i| labels[i]).collect();

    for (name, mode) in [("nb", FeatureMode::Set), ("rf", FeatureMode::Count)] {
        let cfg = NGramConfig::default_range(mode);
        let mut vocab = Vocabulary::new();
        let train_sets: Vec<_> = train_idx
            .iter()
            .map(|&i| {
                ngram_featurize(
                    &tokenize(&dataset.records()[i].smiles).unwrap(),
                    &cfg,
                    &mut vocab,
                )
            })
            .collect();
        vocab.freeze();
        let test_sets: Vec<_> = test_idx
            .iter()
            .map(|&i| {
                ngram_transform(&tokenize(&dataset.records()[i].smiles).unwrap(), &cfg, &vocab)
            })
            .collect();

        let probs = match name {
            "nb" => {
                let model = nb_fit(&train_sets, &train_labels, 1.0, vocab.len()).unwrap();
                model.predict_proba(&test_sets).unwrap()
            }
            _ => {
                let model = rf_fit(
                    &train_sets,
                    &train_labels,
                    vocab.len(),
                    ForestParams {
                        trees: 200,
                        min_leaf: 2,
                        seed: 3,
                    },
                )
                .unwrap();
                model.predict_proba(&test_sets).unwrap()
            }
        };
        println!(
            "{}: held-out log loss {:.4}, accuracy {:.3}",
            name,
            log_loss(&probs, &test_labels).unwrap(),
            accuracy(&probs, &test_labels).unwrap()
        );
    }
}
