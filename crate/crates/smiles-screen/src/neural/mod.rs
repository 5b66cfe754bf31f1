//! Sequence models built from first principles with exact gradients: the
//! region-based CNN over one-hot 2-char symbols, a GRU many-to-one
//! classifier, and class-conditional GRU language models with a logistic
//! stacker. Everything is f64 and deterministic given a seed.

mod cnn;
mod gru;
mod lm;
pub mod optim;
mod train;

pub use cnn::{CnnConfig, CnnModel};
pub use gru::{GruClassifier, GruConfig};
pub use lm::{lm_fit, rnnlm_classify_fit, LmConfig, LmModel, RnnLmStacker};
pub use optim::{clip_grad_norm, Optimizer, OptimizerKind};
pub use train::{
    predict_averaged, train_sequence_classifier, AveragedPrediction, FitOutcome, TrainConfig,
    TrainSample,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("training diverged (loss is not finite) at epoch {epoch}; config: {config}")]
    Diverged { epoch: usize, config: String },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("need at least {need} training sequences, got {got}")]
    TooFewSequences { need: usize, got: usize },
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("molecule cannot be written: {0}")]
    Unwritable(String),
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable mean binary cross-entropy from a logit, together with
/// the derivative of the per-sample loss with respect to the logit.
pub(crate) fn bce_from_logit(logit: f64, label: u8) -> (f64, f64) {
    let y = label as f64;
    let loss = if logit >= 0.0 {
        (1.0 - y) * logit + (1.0 + (-logit).exp()).ln()
    } else {
        -y * logit + (1.0 + logit.exp()).ln()
    };
    (loss, sigmoid(logit) - y)
}

/// The common face of the trainable sequence classifiers: flat parameters,
/// a logit per sequence, and exact mean-loss gradients per batch.
pub trait SequenceClassifier {
    fn theta(&self) -> &[f64];
    fn theta_mut(&mut self) -> &mut [f64];
    fn forward_logit(&self, seq: &[u32]) -> f64;
    /// Mean BCE over the batch and its gradient, exactly.
    fn batch_gradient(&self, batch: &[(&[u32], u8)]) -> (f64, Vec<f64>);

    fn predict(&self, seq: &[u32]) -> f64 {
        sigmoid(self.forward_logit(seq))
    }

    fn batch_loss(&self, batch: &[(&[u32], u8)]) -> f64 {
        batch
            .iter()
            .map(|&(seq, y)| bce_from_logit(self.forward_logit(seq), y).0)
            .sum::<f64>()
            / batch.len() as f64
    }
}

/// Central finite differences of an arbitrary scalar function of a flat
/// parameter vector. This only needs forward evaluations, so it stays
/// independent of any analytic backward pass it is used to verify.
pub fn finite_difference_gradient<F>(mut f: F, theta: &[f64], eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut work = theta.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let original = work[i];
        work[i] = original + eps;
        let plus = f(&work);
        work[i] = original - eps;
        let minus = f(&work);
        work[i] = original;
        grad[i] = (plus - minus) / (2.0 * eps);
    }
    grad
}

/// Elementwise relative error with an absolute floor that keeps near-zero
/// coordinates from blowing the ratio up.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
