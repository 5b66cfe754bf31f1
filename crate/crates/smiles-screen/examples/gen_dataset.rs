//! Write a synthetic screening corpus to CSV, ready for the CLI:
//!
//! ```text
//! cargo run --example gen_dataset -- 500 corpus.csv
//! smiles-screen evaluate --data corpus.csv --model svm --repr ngram --seed 1 --out results/
//! ```
//!
//! Labels are exact: a molecule is active iff its canonical token stream
//! contains the four-token O N N O motif.

use smiles_screen::harness::write_dataset_csv;
use smiles_screen::synthetic::planted_motif_dataset;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args
        .next()
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);
    let path = std::path::PathBuf::from(
        args.next().unwrap_or_else(|| "synthetic_screen.csv".to_string()),
    );
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let dataset = planted_motif_dataset("synthetic_screen", n, seed);
    let actives = dataset.records().iter().filter(|r| r.label == 1).count();
    write_dataset_csv(&dataset, &path).unwrap();
    println!(
        "wrote {} molecules ({} active / {} inactive) to {}",
        dataset.len(),
        actives,
        dataset.len() - actives,
        path.display()
    );
}
