//! The non-neural classifier zoo over n-gram features: Jaccard-kernel SVM
//! with Platt-calibrated probabilities, Bernoulli naive Bayes, and a random
//! forest, all behind one probabilistic-classifier contract.

mod forest;
mod jaccard;
pub mod logistic;
mod nb;
mod svm;

pub use forest::{rf_fit, rf_fit_subset, ForestModel, ForestParams, Node, Tree};
pub use jaccard::{jaccard_kernel, GramMatrix};
pub use nb::{nb_fit, NbModel};
pub use svm::{svm_fit, svm_fit_precomputed, svm_fit_subset, SvmModel};

use thiserror::Error;

use crate::features::NGramSet;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("features come from different vocabularies ({0} vs {1})")]
    VocabularyMismatch(u64, u64),
    #[error("expected {expected} features, got {got}")]
    WrongMode { expected: String, got: String },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature and label counts differ ({features} vs {labels})")]
    LengthMismatch { features: usize, labels: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// A fitted binary classifier that outputs the probability of the positive
/// class for each sample. Implementations are immutable once fitted and are
/// deterministic functions of (training data, hyperparameters, seed).
pub trait ProbClassifier {
    fn predict_proba(&self, features: &[NGramSet]) -> Result<Vec<f64>, ModelError>;
}

pub(crate) fn check_binary_labels(labels: &[u8], features: usize) -> Result<(), ModelError> {
    if labels.len() != features {
        return Err(ModelError::LengthMismatch {
            features,
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(ModelError::SingleClass);
    }
    Ok(())
}
