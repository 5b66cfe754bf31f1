//! The three featurizations side by side: token streams, n-gram sets or
//! bags, and 2-character symbol sequences with their one-hot view.

use smiles_screen::features::{
    ngram_featurize, one_hot, symbol_encode, tokenize, FeatureMode, NGramConfig, SymbolStride,
    Vocabulary,
};

fn main() {
    let smiles = "CC(=O)[O-]";
    let tokens = tokenize(smiles).unwrap();
    println!("tokens of {}:", smiles);
    for t in &tokens {
        println!("  {:<6} {:?}", t.text, t.kind);
    }

    // token n-grams, set and count modes
    let mut vocab = Vocabulary::new();
    let set = ngram_featurize(
        &tokens,
        &NGramConfig::new(1, 2, FeatureMode::Set).unwrap(),
        &mut vocab,
    );
    println!("\n1-2-gram set features:");
    for &idx in set.indices() {
        println!("  [{}] {}", idx, vocab.symbol(idx).unwrap());
    }
    let counts = ngram_featurize(
        &tokens,
        &NGramConfig::new(1, 1, FeatureMode::Count).unwrap(),
        &mut vocab,
    );
    println!("unigram counts:");
    for (&idx, &count) in counts.indices().iter().zip(counts.counts()) {
        println!("  {} x{}", vocab.symbol(idx).unwrap(), count);
    }

    // 2-char symbols and their one-hot matrix
    let mut symbol_vocab = Vocabulary::new();
    let seq = symbol_encode(smiles, SymbolStride::One, &mut symbol_vocab);
    let names: Vec<&str> = seq
        .symbols
        .iter()
        .map(|&i| symbol_vocab.symbol(i).unwrap())
        .collect();
    println!("\n2-char symbols (stride 1): {:?}", names);
    let matrix = one_hot(&seq, symbol_vocab.len()).unwrap();
    println!("one-hot shape: {:?}, row sums all 1", matrix.shape());
}
