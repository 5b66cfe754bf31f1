//! The Jaccard-kernel SVM end to end: n-gram sets, the Gram matrix, the
//! dual solve, and Platt-calibrated probabilities on held-out molecules.

use smiles_screen::features::{ngram_featurize, ngram_transform, tokenize, FeatureMode, NGramConfig, Vocabulary};
use smiles_screen::harness::{accuracy, log_loss, stratified_folds_from_labels};
use smiles_screen::models::{jaccard_kernel, svm_fit, ProbClassifier};
use smiles_screen::synthetic::planted_motif_dataset;

fn main() {
    let dataset = planted_motif_dataset("svm-demo", 300, 7);
    let labels = dataset.labels();
    let plan = stratified_folds_from_labels(&labels, 5, 7).unwrap();
    let test_idx = plan.fold_indices(0);
    let train_idx = plan.complement_indices(0);

    // vocabulary and features fit on the training split only
    let cfg = NGramConfig::default_range(FeatureMode::Set);
    let mut vocab = Vocabulary::new();
    let featurize = |idx: &[usize], vocab: &mut Vocabulary, frozen: bool| {
        idx.iter()
            .map(|&i| {
                let tokens = tokenize(&dataset.records()[i].smiles).unwrap();
                if frozen {
                    ngram_transform(&tokens, &cfg, vocab)
                } else {
                    ngram_featurize(&tokens, &cfg, vocab)
                }
            })
            .collect::<Vec<_>>()
    };
    let train_sets = featurize(&train_idx, &mut vocab, false);
    vocab.freeze();
    let test_sets = featurize(&test_idx, &mut vocab, true);
    println!("vocabulary: {} grams", vocab.len());

    let k = jaccard_kernel(&train_sets[0], &train_sets[1]).unwrap();
    println!("kernel(sample0, sample1) = {:.3}", k);

    let train_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
    let model = svm_fit(&train_sets, &train_labels, 10.0).unwrap();
    println!(
        "fitted: {} support samples, KKT gap {:.2e}, Platt (a, b) = ({:.3}, {:.3})",
        model.support_count(),
        model.dual_gap(),
        model.platt().0,
        model.platt().1
    );

    let probs = model.predict_proba(&test_sets).unwrap();
    let test_labels: Vec<u8> = test_idx.iter().map(|&i| labels[i]).collect();
    println!(
        "held-out log loss {:.4}, accuracy {:.3}",
        log_loss(&probs, &test_labels).unwrap(),
        accuracy(&probs, &test_labels).unwrap()
    );
}
