//! Deterministic stratified k-fold assignment: per class, shuffle by seed,
//! deal round-robin. Per-fold class counts stay within one of the ideal.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, HarnessError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    /// `assignment[i]` is the fold index of record `i`.
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn complement_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Stratified assignment over binary labels. Every class must have at least
/// `k` members.
pub fn stratified_folds_from_labels(
    labels: &[u8],
    k: usize,
    seed: u64,
) -> Result<FoldPlan, HarnessError> {
    if k < 2 {
        return Err(HarnessError::BadFoldCount(k));
    }
    let mut assignment = vec![usize::MAX; labels.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(HarnessError::ClassSmallerThanFolds {
                class,
                size: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for (j, &idx) in members.iter().enumerate() {
            assignment[idx] = j % k;
        }
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
    })
}

pub fn stratified_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan, HarnessError> {
    stratified_folds_from_labels(&dataset.labels(), k, seed)
}
