//! Jaccard (Tanimoto) similarity on binary n-gram sets, and the cached Gram
//! matrix the SVM trains on.

use super::ModelError;
use crate::features::{FeatureMode, NGramSet};

fn require_set_mode(set: &NGramSet) -> Result<(), ModelError> {
    if set.mode() != FeatureMode::Set {
        return Err(ModelError::WrongMode {
            expected: FeatureMode::Set.to_string(),
            got: set.mode().to_string(),
        });
    }
    Ok(())
}

/// |a ∩ b| / |a ∪ b| on sorted index sets. Two empty sets are identical
/// objects and score 1.
pub fn jaccard_kernel(a: &NGramSet, b: &NGramSet) -> Result<f64, ModelError> {
    require_set_mode(a)?;
    require_set_mode(b)?;
    if a.vocab_id() != b.vocab_id() {
        return Err(ModelError::VocabularyMismatch(a.vocab_id(), b.vocab_id()));
    }
    Ok(jaccard_unchecked(a, b))
}

pub(crate) fn jaccard_unchecked(a: &NGramSet, b: &NGramSet) -> f64 {
    let (xs, ys) = (a.indices(), b.indices());
    if xs.is_empty() && ys.is_empty() {
        return 1.0;
    }
    let mut i = 0;
    let mut j = 0;
    let mut intersection = 0usize;
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                intersection += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = xs.len() + ys.len() - intersection;
    intersection as f64 / union as f64
}

/// Pairwise kernel values over one sample list. Symmetric by construction,
/// with unit diagonal.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    pub fn compute(sets: &[NGramSet]) -> Result<GramMatrix, ModelError> {
        for set in sets {
            require_set_mode(set)?;
        }
        if let Some(first) = sets.first() {
            for set in sets {
                if set.vocab_id() != first.vocab_id() {
                    return Err(ModelError::VocabularyMismatch(
                        first.vocab_id(),
                        set.vocab_id(),
                    ));
                }
            }
        }
        let n = sets.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let k = jaccard_unchecked(&sets[i], &sets[j]);
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        Ok(GramMatrix { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{ngram_featurize, tokenize, NGramConfig, Vocabulary};

    fn set_of(vocab_id: u64, indices: &[u32]) -> NGramSet {
        NGramSet::from_parts(
            indices.iter().map(|&i| (i, 1)),
            FeatureMode::Set,
            vocab_id,
        )
    }

    #[test]
    fn identical_sets_score_one() {
        let a = set_of(1, &[2, 3, 5]);
        assert_eq!(jaccard_kernel(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_sets_score_zero() {
        let a = set_of(1, &[2, 3]);
        let b = set_of(1, &[4, 5]);
        assert_eq!(jaccard_kernel(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn one_common_of_three() {
        let a = set_of(1, &[2, 3]);
        let b = set_of(1, &[3, 4]);
        assert!((jaccard_kernel(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn both_empty_sets_score_one() {
        let a = set_of(1, &[]);
        let b = set_of(1, &[]);
        assert_eq!(jaccard_kernel(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn vocabulary_mixing_is_rejected() {
        let a = set_of(1, &[2]);
        let b = set_of(2, &[2]);
        assert!(matches!(
            jaccard_kernel(&a, &b),
            Err(ModelError::VocabularyMismatch(1, 2))
        ));
    }

    #[test]
    fn count_mode_is_rejected() {
        let a = NGramSet::from_parts([(2, 3)], FeatureMode::Count, 1);
        let b = set_of(1, &[2]);
        assert!(matches!(jaccard_kernel(&a, &b), Err(ModelError::WrongMode { .. })));
    }

    #[test]
    fn gram_matrix_is_symmetric_with_unit_diagonal() {
        let mut vocab = Vocabulary::new();
        let cfg = NGramConfig::default_range(FeatureMode::Set);
        let sets: Vec<NGramSet> = ["CCO", "c1ccccc1", "CC(C)C", "CCO"]
            .iter()
            .map(|s| ngram_featurize(&tokenize(s).unwrap(), &cfg, &mut vocab))
            .collect();
        let gram = GramMatrix::compute(&sets).unwrap();
        for i in 0..gram.n() {
            assert_eq!(gram.get(i, i), 1.0);
            for j in 0..gram.n() {
                assert_eq!(gram.get(i, j), gram.get(j, i));
            }
        }
        // identical molecules -> kernel 1 off the diagonal too
        assert_eq!(gram.get(0, 3), 1.0);
    }
}
