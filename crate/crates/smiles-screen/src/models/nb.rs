//! Bernoulli naive Bayes over n-gram presence, with Laplace smoothing.

use super::{check_binary_labels, ModelError, ProbClassifier};
use crate::features::NGramSet;

/// Fitted Bernoulli naive Bayes. Count-mode features are interpreted as
/// presence (the Bernoulli event is "gram occurs at least once").
#[derive(Debug, Clone)]
pub struct NbModel {
    log_prior: [f64; 2],
    /// log theta and log(1 - theta) per feature per class.
    log_on: Vec<[f64; 2]>,
    log_off: Vec<[f64; 2]>,
    /// Per class, the sum of log(1 - theta) over every feature, so scoring a
    /// sample only touches its present features.
    off_sum: [f64; 2],
    alpha: f64,
    vocab_size: usize,
    vocab_id: u64,
}

impl NbModel {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn log_prior(&self) -> [f64; 2] {
        self.log_prior
    }

    pub(crate) fn parts(&self) -> (&[[f64; 2]], &[[f64; 2]], [f64; 2], u64) {
        (&self.log_on, &self.log_off, self.off_sum, self.vocab_id)
    }

    pub(crate) fn from_raw(
        log_prior: [f64; 2],
        log_on: Vec<[f64; 2]>,
        log_off: Vec<[f64; 2]>,
        off_sum: [f64; 2],
        alpha: f64,
        vocab_id: u64,
    ) -> NbModel {
        NbModel {
            log_prior,
            vocab_size: log_on.len(),
            log_on,
            log_off,
            off_sum,
            alpha,
            vocab_id,
        }
    }
}

/// Fits presence probabilities theta = (count + alpha) / (n_class + 2 alpha)
/// per feature and class.
pub fn nb_fit(
    sets: &[NGramSet],
    labels: &[u8],
    alpha: f64,
    vocab_size: usize,
) -> Result<NbModel, ModelError> {
    check_binary_labels(labels, sets.len())?;
    if alpha <= 0.0 {
        return Err(ModelError::Numerical("smoothing alpha must be positive".into()));
    }
    let vocab_id = sets[0].vocab_id();
    for s in sets {
        if s.vocab_id() != vocab_id {
            return Err(ModelError::VocabularyMismatch(vocab_id, s.vocab_id()));
        }
    }

    let n = labels.len() as f64;
    let n_class = [
        labels.iter().filter(|&&y| y == 0).count() as f64,
        labels.iter().filter(|&&y| y == 1).count() as f64,
    ];
    let log_prior = [(n_class[0] / n).ln(), (n_class[1] / n).ln()];

    let mut present = vec![[0f64; 2]; vocab_size];
    for (set, &y) in sets.iter().zip(labels) {
        for &idx in set.indices() {
            present[idx as usize][y as usize] += 1.0;
        }
    }

    let mut log_on = vec![[0f64; 2]; vocab_size];
    let mut log_off = vec![[0f64; 2]; vocab_size];
    let mut off_sum = [0f64; 2];
    for j in 0..vocab_size {
        for c in 0..2 {
            let theta = (present[j][c] + alpha) / (n_class[c] + 2.0 * alpha);
            log_on[j][c] = theta.ln();
            log_off[j][c] = (1.0 - theta).ln();
            off_sum[c] += log_off[j][c];
        }
    }

    Ok(NbModel {
        log_prior,
        log_on,
        log_off,
        off_sum,
        alpha,
        vocab_size,
        vocab_id,
    })
}

impl ProbClassifier for NbModel {
    fn predict_proba(&self, features: &[NGramSet]) -> Result<Vec<f64>, ModelError> {
        features
            .iter()
            .map(|set| {
                if set.vocab_id() != self.vocab_id {
                    return Err(ModelError::VocabularyMismatch(
                        self.vocab_id,
                        set.vocab_id(),
                    ));
                }
                let mut score = [
                    self.log_prior[0] + self.off_sum[0],
                    self.log_prior[1] + self.off_sum[1],
                ];
                for &idx in set.indices() {
                    let j = idx as usize;
                    if j >= self.vocab_size {
                        continue;
                    }
                    for c in 0..2 {
                        score[c] += self.log_on[j][c] - self.log_off[j][c];
                    }
                }
                // normalized posterior for class 1
                let m = score[0].max(score[1]);
                let e0 = (score[0] - m).exp();
                let e1 = (score[1] - m).exp();
                Ok(e1 / (e0 + e1))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMode;

    fn set_of(indices: &[u32]) -> NGramSet {
        NGramSet::from_parts(indices.iter().map(|&i| (i, 1)), FeatureMode::Set, 3)
    }

    #[test]
    fn perfectly_correlated_feature_matches_hand_computation() {
        // Feature 2 present iff label 1; two samples per class; alpha = 1.
        let sets = vec![set_of(&[2]), set_of(&[2]), set_of(&[]), set_of(&[])];
        let labels = vec![1, 1, 0, 0];
        let model = nb_fit(&sets, &labels, 1.0, 3).unwrap();
        let p = model.predict_proba(&[set_of(&[2])]).unwrap()[0];
        // theta_1 = (2+1)/(2+2) = 3/4, theta_0 = (0+1)/(2+2) = 1/4.
        // Off-features (vocab 0,1) are absent everywhere: theta = 1/4 for
        // both classes, so their odds cancel. Priors are equal.
        // p = (3/4) / (3/4 + 1/4) = 3/4.
        assert!((p - 0.75).abs() < 1e-12, "p = {}", p);
        let p_absent = model.predict_proba(&[set_of(&[])]).unwrap()[0];
        // absent: (1/4)/(1/4 + 3/4) = 1/4
        assert!((p_absent - 0.25).abs() < 1e-12);
    }

    #[test]
    fn uniform_features_balanced_classes_give_half() {
        let sets = vec![set_of(&[2, 3]), set_of(&[2, 3]), set_of(&[2, 3]), set_of(&[2, 3])];
        let labels = vec![1, 0, 1, 0];
        let model = nb_fit(&sets, &labels, 1.0, 4).unwrap();
        let p = model.predict_proba(&[set_of(&[2, 3])]).unwrap()[0];
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_feature_vector_returns_smoothed_prior_posterior() {
        // With no features at all (vocab_size 0), the posterior is the prior.
        let sets = vec![set_of(&[]), set_of(&[]), set_of(&[]), set_of(&[]), set_of(&[]), set_of(&[])];
        let labels = vec![1, 1, 0, 0, 0, 0];
        let model = nb_fit(&sets, &labels, 1.0, 0).unwrap();
        let p = model.predict_proba(&[set_of(&[])]).unwrap()[0];
        assert!((p - 2.0 / 6.0).abs() < 1e-12, "p = {}", p);
    }

    #[test]
    fn column_permutation_leaves_predictions_unchanged() {
        let sets = vec![
            set_of(&[0, 2]),
            set_of(&[2, 3]),
            set_of(&[0]),
            set_of(&[3, 4]),
            set_of(&[4]),
            set_of(&[0, 4]),
        ];
        let labels = vec![1, 1, 1, 0, 0, 0];
        let model = nb_fit(&sets, &labels, 0.5, 5).unwrap();
        let before = model.predict_proba(&sets).unwrap();

        // permute columns by perm[j]
        let perm = [3u32, 0, 4, 1, 2];
        let permuted: Vec<NGramSet> = sets
            .iter()
            .map(|s| {
                set_of(
                    &s.indices()
                        .iter()
                        .map(|&i| perm[i as usize])
                        .collect::<Vec<u32>>(),
                )
            })
            .collect();
        let model_p = nb_fit(&permuted, &labels, 0.5, 5).unwrap();
        let after = model_p.predict_proba(&permuted).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
