//! Evaluation metrics: log loss (the primary metric) and accuracy.

use super::HarnessError;

/// Probabilities are clamped into this range before taking logs.
pub const PROB_CLAMP: f64 = 1e-15;

/// Negative mean log likelihood of binary labels under predicted
/// probabilities of the positive class.
pub fn log_loss(probabilities: &[f64], labels: &[u8]) -> Result<f64, HarnessError> {
    if probabilities.len() != labels.len() {
        return Err(HarnessError::LengthMismatch {
            left: probabilities.len(),
            right: labels.len(),
        });
    }
    if probabilities.is_empty() {
        return Err(HarnessError::LengthMismatch { left: 0, right: 0 });
    }
    let mut total = 0.0;
    for (&p, &y) in probabilities.iter().zip(labels) {
        let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total += if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
    }
    Ok(total / probabilities.len() as f64)
}

/// Fraction of correct 0.5-thresholded predictions (p >= 0.5 predicts 1).
pub fn accuracy(probabilities: &[f64], labels: &[u8]) -> Result<f64, HarnessError> {
    if probabilities.len() != labels.len() || probabilities.is_empty() {
        return Err(HarnessError::LengthMismatch {
            left: probabilities.len(),
            right: labels.len(),
        });
    }
    let correct = probabilities
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| u8::from(p >= 0.5) == y)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}
