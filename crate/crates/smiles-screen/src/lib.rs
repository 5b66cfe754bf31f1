//! Ligand-based virtual screening directly on SMILES text.
//!
//! The library covers the whole pipeline: a SMILES parser and writer over
//! molecular graphs, randomized re-walking for data augmentation, n-gram and
//! 2-char-symbol featurization, a classifier zoo (Jaccard-kernel SVM, naive
//! Bayes, random forest, CNN, GRU, and class-conditional language models
//! with a logistic stacker), and a nested stratified cross-validation
//! harness that reports log loss per model and dataset.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! examples/
//! ├── parse_and_diagnose.rs   # parsing + error offsets
//! ├── canonicalize.rs         # labeling-independent canonical SMILES
//! ├── enumerate_walks.rs      # randomized SMILES writings of one molecule
//! ├── chain_diameter.rs       # longest carbon chain and diameter stats
//! ├── tokenize_features.rs    # tokens, n-grams, 2-char symbols, one-hot
//! ├── jaccard_svm.rs          # SVM with the Jaccard kernel + calibration
//! ├── classical_models.rs     # naive Bayes vs random forest
//! ├── gradient_check.rs       # finite-difference verification of CNN/GRU
//! ├── cnn_motif.rs            # training the CNN on a planted motif
//! ├── rnnlm_stacker.rs        # per-class language models + stacker
//! ├── gen_dataset.rs          # write a synthetic screening corpus as CSV
//! └── nested_cv_report.rs     # the full evaluate pipeline, in miniature
//! ```
//!
//! Run one with `cargo run --release --example <name>`.
//!
//! The same functionality is scriptable through the thin `smiles-screen`
//! binary (`parse`, `canonicalize`, `augment`, `stats`, `train`,
//! `evaluate`).
//!
//! ## Quick taste
//!
//! ```
//! use smiles_screen::smiles::{parse_smiles, canonical_smiles};
//!
//! let a = parse_smiles("OCC").unwrap();
//! let b = parse_smiles("CCO").unwrap();
//! assert_eq!(canonical_smiles(&a).unwrap(), canonical_smiles(&b).unwrap());
//! ```

pub mod augment;
pub mod features;
pub mod harness;
pub mod model_io;
pub mod models;
pub mod neural;
pub mod smiles;
pub mod structure;
pub mod synthetic;
pub mod util;
