//! Class-conditional GRU language models over symbol sequences, and the
//! logistic stacker that turns their log likelihoods into a classifier.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gru::{gru_layout, GruCell, GruConfig, GruLayout};
use super::optim::Optimizer;
use super::{clip_grad_norm, NeuralError, TrainConfig};
use crate::models::logistic::{logistic_fit, LogisticModel};
use crate::models::ModelError;
use crate::util::derive_seed;

/// Architecture of one language model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LmConfig {
    pub embed_dim: usize,
    pub hidden: usize,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            embed_dim: 16,
            hidden: 24,
        }
    }
}

/// A next-symbol model over `base_vocab` symbols plus BOS/EOS sentinels.
#[derive(Debug, Clone)]
pub struct LmModel {
    base_vocab: usize,
    gru_cfg: GruConfig,
    gru: GruLayout,
    w_out: usize,
    b_out: usize,
    total: usize,
    theta: Vec<f64>,
}

impl LmModel {
    fn extended_vocab(base_vocab: usize) -> usize {
        base_vocab + 2
    }

    pub fn bos(&self) -> u32 {
        self.base_vocab as u32
    }

    pub fn eos(&self) -> u32 {
        self.base_vocab as u32 + 1
    }

    pub fn base_vocab(&self) -> usize {
        self.base_vocab
    }

    pub fn config(&self) -> (LmConfig, usize) {
        (
            LmConfig {
                embed_dim: self.gru_cfg.embed_dim,
                hidden: self.gru_cfg.hidden,
            },
            self.base_vocab,
        )
    }

    pub fn param_count(&self) -> usize {
        self.total
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Fresh Glorot-initialized parameters; [`lm_fit`] is the usual entry
    /// point, this is for direct experimentation.
    pub fn init(base_vocab: usize, cfg: LmConfig, rng: &mut ChaCha8Rng) -> LmModel {
        let vocab = Self::extended_vocab(base_vocab);
        let gru_cfg = GruConfig {
            vocab_size: vocab,
            embed_dim: cfg.embed_dim,
            hidden: cfg.hidden,
        };
        let gru = gru_layout(&gru_cfg, 0);
        let w_out = gru.end;
        let b_out = w_out + vocab * cfg.hidden;
        let total = b_out + vocab;
        let mut theta = vec![0.0; total];
        let cell = GruCell {
            cfg: &gru_cfg,
            layout: gru,
        };
        cell.init_params(&mut theta, rng);
        let bound = (6.0 / (cfg.hidden as f64 + vocab as f64)).sqrt();
        use rand::Rng;
        for w in &mut theta[w_out..b_out] {
            *w = rng.gen_range(-bound..bound);
        }
        LmModel {
            base_vocab,
            gru_cfg,
            gru,
            w_out,
            b_out,
            total,
            theta,
        }
    }

    /// Rebuilds a model around an existing flat parameter vector.
    pub fn from_theta(base_vocab: usize, cfg: LmConfig, theta: Vec<f64>) -> LmModel {
        let mut model = LmModel::init(base_vocab, cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(model.theta.len(), theta.len());
        model.theta = theta;
        model
    }

    fn cell(&self) -> GruCell<'_> {
        GruCell {
            cfg: &self.gru_cfg,
            layout: self.gru,
        }
    }

    /// Normalized next-symbol distribution at one hidden state.
    fn softmax_at(&self, h: &[f64]) -> Vec<f64> {
        let vocab = Self::extended_vocab(self.base_vocab);
        let hidden = self.gru_cfg.hidden;
        let mut logits = Vec::with_capacity(vocab);
        for s in 0..vocab {
            let row = &self.theta[self.w_out + s * hidden..self.w_out + (s + 1) * hidden];
            let z: f64 =
                self.theta[self.b_out + s] + row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
            logits.push(z);
        }
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for e in exps.iter_mut() {
            *e /= sum;
        }
        exps
    }

    /// Sum of log next-symbol probabilities along `seq`, EOS included.
    /// Always non-positive.
    pub fn loglik(&self, seq: &[u32]) -> f64 {
        let cell = self.cell();
        let mut h = vec![0.0; self.gru_cfg.hidden];
        let mut input = self.bos();
        let mut total = 0.0;
        for t in 0..=seq.len() {
            let (next_h, _) = cell.step(&self.theta, input, &h);
            h = next_h;
            let probs = self.softmax_at(&h);
            let target = if t < seq.len() { seq[t] } else { self.eos() };
            total += probs[target as usize].max(f64::MIN_POSITIVE).ln();
            if t < seq.len() {
                input = seq[t];
            }
        }
        total
    }

    /// Mean per-symbol cross-entropy of a corpus, in nats.
    pub fn mean_symbol_ce(&self, seqs: &[Vec<u32>]) -> f64 {
        let mut total = 0.0;
        let mut steps = 0usize;
        for seq in seqs {
            total -= self.loglik(seq);
            steps += seq.len() + 1;
        }
        total / steps as f64
    }

    /// Mean per-step CE of one sequence plus the full parameter gradient,
    /// scaled by `weight`; the building block of [`lm_fit`] and of gradient
    /// verification.
    pub fn sequence_gradient(&self, seq: &[u32], weight: f64, grad: &mut [f64]) -> f64 {
        let cell = self.cell();
        let hidden = self.gru_cfg.hidden;
        let steps = seq.len() + 1;
        let mut h = vec![0.0; hidden];
        let mut caches = Vec::with_capacity(steps);
        let mut hs = Vec::with_capacity(steps);
        let mut dlogits_per_step: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut loss = 0.0;
        let mut input = self.bos();
        for t in 0..steps {
            let (next_h, cache) = cell.step(&self.theta, input, &h);
            h = next_h;
            caches.push(cache);
            hs.push(h.clone());
            let mut probs = self.softmax_at(&h);
            let target = if t < seq.len() { seq[t] } else { self.eos() } as usize;
            loss -= probs[target].max(f64::MIN_POSITIVE).ln() / steps as f64;
            probs[target] -= 1.0; // softmax - onehot
            dlogits_per_step.push(probs);
            if t < seq.len() {
                input = seq[t];
            }
        }

        let step_scale = weight / steps as f64;
        let mut dh = vec![0.0; hidden];
        for t in (0..steps).rev() {
            let dlogits = &dlogits_per_step[t];
            for (s, &dl) in dlogits.iter().enumerate() {
                let dl = dl * step_scale;
                if dl == 0.0 {
                    continue;
                }
                grad[self.b_out + s] += dl;
                let row = self.w_out + s * hidden;
                for i in 0..hidden {
                    grad[row + i] += dl * hs[t][i];
                    dh[i] += dl * self.theta[row + i];
                }
            }
            dh = cell.step_backward(&self.theta, &caches[t], &dh, grad);
        }
        loss * weight
    }
}

/// Fits a language model on one class's sequences by next-symbol
/// cross-entropy, with a 10% validation split for early stopping.
pub fn lm_fit(
    sequences: &[Vec<u32>],
    base_vocab: usize,
    cfg: LmConfig,
    train: &TrainConfig,
) -> Result<LmModel, NeuralError> {
    if sequences.len() < 10 {
        return Err(NeuralError::TooFewSequences {
            need: 10,
            got: sequences.len(),
        });
    }
    train.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(train.seed, &[0x1a]));
    let mut model = LmModel::init(base_vocab, cfg, &mut rng);

    let mut order: Vec<usize> = (0..sequences.len()).collect();
    order.shuffle(&mut rng);
    let val_count = (sequences.len() / 10).max(1);
    let (val_idx, train_idx) = order.split_at(val_count);
    let val: Vec<Vec<u32>> = val_idx.iter().map(|&i| sequences[i].clone()).collect();

    let mut optimizer = Optimizer::new(train.optimizer, train.learning_rate, model.total);
    let mut best_theta = model.theta.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    for epoch in 0..train.epochs {
        let mut epoch_rng = ChaCha8Rng::seed_from_u64(derive_seed(train.seed, &[0x2b, epoch as u64]));
        let mut shuffled = train_idx.to_vec();
        shuffled.shuffle(&mut epoch_rng);
        let mut epoch_loss = 0.0;
        for batch in shuffled.chunks(train.batch_size) {
            let mut grad = vec![0.0; model.total];
            let weight = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += model.sequence_gradient(&sequences[i], weight, &mut grad);
            }
            epoch_loss += batch_loss;
            clip_grad_norm(&mut grad, train.clip_norm);
            optimizer.step(&mut model.theta, &grad);
        }
        if !epoch_loss.is_finite() {
            return Err(NeuralError::Diverged {
                epoch,
                config: format!("{:?}", train),
            });
        }
        let val_ce = model.mean_symbol_ce(&val);
        if val_ce < best_val - 1e-12 {
            best_val = val_ce;
            best_epoch = epoch;
            best_theta.copy_from_slice(&model.theta);
        } else if epoch - best_epoch > train.patience {
            break;
        }
    }
    model.theta = best_theta;
    Ok(model)
}

/// Classifier on top of a language model pair: logistic regression over
/// per-symbol log likelihoods under each model plus the sequence length.
#[derive(Debug, Clone)]
pub struct RnnLmStacker {
    pub active: LmModel,
    pub inactive: LmModel,
    pub stacker: LogisticModel,
}

fn stack_features(active: &LmModel, inactive: &LmModel, seq: &[u32]) -> Vec<f64> {
    let steps = (seq.len() + 1) as f64;
    vec![
        active.loglik(seq) / steps,
        inactive.loglik(seq) / steps,
        steps,
    ]
}

/// Fits the logistic stacker. The language models must come from the same
/// training fold as `labeled` or the evaluation leaks.
pub fn rnnlm_classify_fit(
    active: LmModel,
    inactive: LmModel,
    labeled: &[(Vec<u32>, u8)],
) -> Result<RnnLmStacker, NeuralError> {
    let x: Vec<Vec<f64>> = labeled
        .iter()
        .map(|(seq, _)| stack_features(&active, &inactive, seq))
        .collect();
    let y: Vec<u8> = labeled.iter().map(|&(_, y)| y).collect();
    let stacker = logistic_fit(&x, &y, 1e-6).map_err(|e| match e {
        ModelError::SingleClass => NeuralError::SingleClass,
        other => NeuralError::BadConfig(other.to_string()),
    })?;
    Ok(RnnLmStacker {
        active,
        inactive,
        stacker,
    })
}

impl RnnLmStacker {
    pub fn predict_proba_seq(&self, seq: &[u32]) -> f64 {
        self.stacker
            .predict_proba_one(&stack_features(&self.active, &self.inactive, seq))
    }
}
