//! The whole evaluation protocol in miniature: nested stratified
//! cross-validation of three models on one synthetic dataset, rendered as
//! the markdown table and the machine-readable CSV.

use smiles_screen::harness::{
    evaluate_dataset, render_csv, render_markdown, ModelKind, ParsedDataset, Representation,
    RunConfig,
};
use smiles_screen::synthetic::planted_motif_dataset;

fn main() {
    let parsed = ParsedDataset::from_dataset(planted_motif_dataset("demo", 250, 21));

    // a trimmed protocol so the example finishes in seconds
    let cfg = RunConfig {
        outer_folds: 3,
        inner_folds: 3,
        svm_c_grid: vec![1.0, 10.0],
        nb_alpha_grid: vec![0.5, 1.0],
        rf_trees_grid: vec![60],
        rf_min_leaf_grid: vec![1, 2],
        ..RunConfig::default()
    };

    let mut evals = Vec::new();
    for (model, repr) in [
        (ModelKind::Svm, Representation::Ngram),
        (ModelKind::Nb, Representation::Ngram),
        (ModelKind::Rf, Representation::Ngram),
        (ModelKind::Prior, Representation::Ngram),
    ] {
        println!("evaluating {} ...", model);
        evals.push(evaluate_dataset(&parsed, model, repr, &cfg, 2024).unwrap());
    }

    println!("\n{}", render_markdown(&evals));
    println!("{}", render_csv(&evals));
    for eval in &evals {
        for fold in &eval.folds {
            println!(
                "{} fold {}: selected {:?}, log loss {:.4}",
                eval.model,
                fold.fold,
                fold.selected,
                fold.log_loss.unwrap()
            );
        }
    }
}
