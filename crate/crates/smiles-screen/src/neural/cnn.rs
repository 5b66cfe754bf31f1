//! Region-based 1D CNN over one-hot symbol sequences: per-region filter
//! banks, ReLU, max over time, dense sigmoid readout. Because inputs are
//! exactly one-hot, every convolution is a gather, which is what makes the
//! full-precision model cheap on a CPU.

use rand::Rng;

use super::{bce_from_logit, SequenceClassifier};
use crate::features::PAD;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnnConfig {
    pub vocab_size: usize,
    /// Region (filter window) sizes, e.g. [5, 3].
    pub regions: Vec<usize>,
    /// Filters per region.
    pub filters: usize,
}

impl CnnConfig {
    pub fn new(vocab_size: usize, regions: Vec<usize>, filters: usize) -> CnnConfig {
        assert!(!regions.is_empty() && filters > 0 && vocab_size > 0);
        CnnConfig {
            vocab_size,
            regions,
            filters,
        }
    }
}

/// Parameter layout inside the flat theta vector. Filter weights for region
/// r are stored as (r * V) x K so the K filter lanes of one input column are
/// contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    w_off: Vec<usize>,
    b_off: Vec<usize>,
    dense_off: usize,
    bias_off: usize,
    total: usize,
}

fn layout(cfg: &CnnConfig) -> Layout {
    let mut offset = 0;
    let mut w_off = Vec::new();
    let mut b_off = Vec::new();
    for &r in &cfg.regions {
        w_off.push(offset);
        offset += r * cfg.vocab_size * cfg.filters;
        b_off.push(offset);
        offset += cfg.filters;
    }
    let dense_off = offset;
    offset += cfg.regions.len() * cfg.filters;
    let bias_off = offset;
    offset += 1;
    Layout {
        w_off,
        b_off,
        dense_off,
        bias_off,
        total: offset,
    }
}

#[derive(Debug, Clone)]
pub struct CnnModel {
    cfg: CnnConfig,
    layout: Layout,
    theta: Vec<f64>,
}

/// Per-sample forward cache: pooled activations plus where each maximum
/// came from.
struct Cache {
    /// (pre-relu max, argmax position) per (region, filter).
    pooled: Vec<(f64, usize)>,
    logit: f64,
}

impl CnnModel {
    /// Glorot-uniform filter and dense weights, zero biases.
    pub fn init<R: Rng>(cfg: CnnConfig, rng: &mut R) -> CnnModel {
        let layout = layout(&cfg);
        let mut theta = vec![0.0; layout.total];
        for (i, &r) in cfg.regions.iter().enumerate() {
            let fan_in = (r * cfg.vocab_size) as f64;
            let fan_out = cfg.filters as f64;
            let a = (6.0 / (fan_in + fan_out)).sqrt();
            for w in &mut theta[layout.w_off[i]..layout.b_off[i]] {
                *w = rng.gen_range(-a..a);
            }
        }
        let dense_len = cfg.regions.len() * cfg.filters;
        let a = (6.0 / (dense_len as f64 + 1.0)).sqrt();
        for w in &mut theta[layout.dense_off..layout.dense_off + dense_len] {
            *w = rng.gen_range(-a..a);
        }
        CnnModel { cfg, layout, theta }
    }

    pub fn config(&self) -> &CnnConfig {
        &self.cfg
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    /// Rebuilds a model around an existing flat parameter vector, e.g. from
    /// a checkpoint or a finite-difference probe.
    pub fn from_theta(cfg: CnnConfig, theta: Vec<f64>) -> CnnModel {
        let layout = layout(&cfg);
        assert_eq!(theta.len(), layout.total);
        CnnModel { cfg, layout, theta }
    }

    /// Positions a window may start at: sequences shorter than the region
    /// are padded up to it, PAD tails are masked out of pooling.
    fn window_count(&self, seq: &[u32], region: usize) -> usize {
        let non_pad = seq.iter().take_while(|&&s| s != PAD).count();
        non_pad.max(region) - region + 1
    }

    fn forward(&self, seq: &[u32]) -> Cache {
        let k = self.cfg.filters;
        let v = self.cfg.vocab_size;
        let mut pooled = Vec::with_capacity(self.cfg.regions.len() * k);
        let mut z = vec![0.0; k];
        for (ri, &r) in self.cfg.regions.iter().enumerate() {
            let w = &self.theta[self.layout.w_off[ri]..self.layout.b_off[ri]];
            let b = &self.theta[self.layout.b_off[ri]..self.layout.b_off[ri] + k];
            let windows = self.window_count(seq, r);
            let mut best: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, 0); k];
            for t in 0..windows {
                z.copy_from_slice(b);
                for j in 0..r {
                    let Some(&s) = seq.get(t + j) else { continue };
                    if s == PAD {
                        continue;
                    }
                    let base = (j * v + s as usize) * k;
                    for (zk, &wk) in z.iter_mut().zip(&w[base..base + k]) {
                        *zk += wk;
                    }
                }
                for (kk, &zk) in z.iter().enumerate() {
                    if zk > best[kk].0 {
                        best[kk] = (zk, t);
                    }
                }
            }
            pooled.extend(best);
        }
        let dense =
            &self.theta[self.layout.dense_off..self.layout.dense_off + pooled.len()];
        let mut logit = self.theta[self.layout.bias_off];
        for (&(pre, _), &w) in pooled.iter().zip(dense) {
            logit += w * pre.max(0.0);
        }
        Cache { pooled, logit }
    }

    /// Accumulates the gradient of one sample's loss into `grad`; the caller
    /// averages. Max-pool routes the gradient to the (lowest-index) argmax
    /// window; inactive ReLUs block it.
    fn accumulate_gradient(&self, seq: &[u32], dlogit: f64, cache: &Cache, grad: &mut [f64]) {
        let k = self.cfg.filters;
        let v = self.cfg.vocab_size;
        grad[self.layout.bias_off] += dlogit;
        let dense = &self.theta[self.layout.dense_off..self.layout.dense_off + cache.pooled.len()];
        for (slot, &(pre, t)) in cache.pooled.iter().enumerate() {
            grad[self.layout.dense_off + slot] += dlogit * pre.max(0.0);
            if pre <= 0.0 {
                continue;
            }
            let dz = dlogit * dense[slot];
            let ri = slot / k;
            let kk = slot % k;
            let r = self.cfg.regions[ri];
            grad[self.layout.b_off[ri] + kk] += dz;
            for j in 0..r {
                let Some(&s) = seq.get(t + j) else { continue };
                if s == PAD {
                    continue;
                }
                let base = self.layout.w_off[ri] + (j * v + s as usize) * k + kk;
                grad[base] += dz;
            }
        }
    }
}

impl SequenceClassifier for CnnModel {
    fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn forward_logit(&self, seq: &[u32]) -> f64 {
        self.forward(seq).logit
    }

    fn batch_gradient(&self, batch: &[(&[u32], u8)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.layout.total];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for &(seq, label) in batch {
            let cache = self.forward(seq);
            let (sample_loss, dlogit) = bce_from_logit(cache.logit, label);
            loss += sample_loss * scale;
            self.accumulate_gradient(seq, dlogit * scale, &cache, &mut grad);
        }
        (loss, grad)
    }
}
