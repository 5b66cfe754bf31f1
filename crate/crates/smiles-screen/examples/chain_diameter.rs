//! The structural statistic behind the text-representation argument: most
//! drug-like molecules sit close to their longest carbon chain, so the
//! linear SMILES walk does not stray far from the graph.

use smiles_screen::smiles::parse_smiles;
use smiles_screen::structure::{chain_result, diameter_report};
use smiles_screen::synthetic::{random_smiles_corpus, MoleculeGenConfig};

fn main() {
    for smiles in ["CCCC", "CC(C)C", "CC(C)Cc1ccc(cc1)C(C)C(=O)O"] {
        let molecule = parse_smiles(smiles).unwrap();
        let result = chain_result(&molecule).unwrap();
        println!(
            "{:<28} chain_len={} diameter={} chain={:?}",
            smiles, result.length, result.diameter, result.chain
        );
    }

    // dataset-level summary over a synthetic drug-like corpus
    let corpus = random_smiles_corpus(300, 11, &MoleculeGenConfig::default());
    let report = diameter_report(corpus.iter().map(String::as_str));
    println!("\n{}", report.summary_text());
}
