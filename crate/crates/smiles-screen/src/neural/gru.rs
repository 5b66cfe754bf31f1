//! GRU recurrence with exact backpropagation through time, written against
//! flat parameter vectors so the classifier and the language model can share
//! the cell.

use rand::Rng;

use super::{bce_from_logit, SequenceClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
}

/// Offsets of the GRU cell inside a flat theta vector starting at `base`.
/// Embedding E is V x D, gate input weights are H x D, recurrent weights
/// H x H, biases H; gates ordered update (z), reset (r), candidate (h).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct GruLayout {
    pub e: usize,
    pub wz: usize,
    pub uz: usize,
    pub bz: usize,
    pub wr: usize,
    pub ur: usize,
    pub br: usize,
    pub wh: usize,
    pub uh: usize,
    pub bh: usize,
    pub end: usize,
}

pub(crate) fn gru_layout(cfg: &GruConfig, base: usize) -> GruLayout {
    let (v, d, h) = (cfg.vocab_size, cfg.embed_dim, cfg.hidden);
    let e = base;
    let wz = e + v * d;
    let uz = wz + h * d;
    let bz = uz + h * h;
    let wr = bz + h;
    let ur = wr + h * d;
    let br = ur + h * h;
    let wh = br + h;
    let uh = wh + h * d;
    let bh = uh + h * h;
    let end = bh + h;
    GruLayout {
        e,
        wz,
        uz,
        bz,
        wr,
        ur,
        br,
        wh,
        uh,
        bh,
        end,
    }
}

fn matvec_add(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..rows {
        let row = &w[i * cols..(i + 1) * cols];
        out[i] += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn matvec_t_add(w: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    for i in 0..rows {
        let row = &w[i * cols..(i + 1) * cols];
        for (o, &wv) in out.iter_mut().zip(row) {
            *o += y[i] * wv;
        }
    }
}

fn outer_add(dw: &mut [f64], rows: usize, cols: usize, y: &[f64], x: &[f64]) {
    for i in 0..rows {
        let row = &mut dw[i * cols..(i + 1) * cols];
        for (r, &xv) in row.iter_mut().zip(x) {
            *r += y[i] * xv;
        }
    }
}

fn sigmoid_vec(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = super::sigmoid(*x);
    }
}

/// Per-step forward cache needed by BPTT.
#[derive(Debug, Clone)]
pub(crate) struct GruStep {
    pub input: u32,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub h_cand: Vec<f64>,
}

pub(crate) struct GruCell<'a> {
    pub cfg: &'a GruConfig,
    pub layout: GruLayout,
}

impl GruCell<'_> {
    /// One step: h = (1 - z) * h_prev + z * tanh(Wh x + Uh (r*h_prev) + bh).
    /// The convex gating keeps every coordinate inside (-1, 1).
    pub fn step(&self, theta: &[f64], input: u32, h_prev: &[f64]) -> (Vec<f64>, GruStep) {
        let (d, h) = (self.cfg.embed_dim, self.cfg.hidden);
        let l = self.layout;
        let x = &theta[l.e + input as usize * d..l.e + (input as usize + 1) * d];

        let mut z = theta[l.bz..l.bz + h].to_vec();
        matvec_add(&theta[l.wz..l.wz + h * d], h, d, x, &mut z);
        matvec_add(&theta[l.uz..l.uz + h * h], h, h, h_prev, &mut z);
        sigmoid_vec(&mut z);

        let mut r = theta[l.br..l.br + h].to_vec();
        matvec_add(&theta[l.wr..l.wr + h * d], h, d, x, &mut r);
        matvec_add(&theta[l.ur..l.ur + h * h], h, h, h_prev, &mut r);
        sigmoid_vec(&mut r);

        let gated: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut h_cand = theta[l.bh..l.bh + h].to_vec();
        matvec_add(&theta[l.wh..l.wh + h * d], h, d, x, &mut h_cand);
        matvec_add(&theta[l.uh..l.uh + h * h], h, h, &gated, &mut h_cand);
        for v in h_cand.iter_mut() {
            *v = v.tanh();
        }

        let h_new: Vec<f64> = (0..h)
            .map(|i| (1.0 - z[i]) * h_prev[i] + z[i] * h_cand[i])
            .collect();
        let cache = GruStep {
            input,
            h_prev: h_prev.to_vec(),
            z,
            r,
            h_cand,
        };
        (h_new, cache)
    }

    /// Backward through one step. `dh` is the loss gradient w.r.t. this
    /// step's output; returns the gradient w.r.t. the previous hidden state
    /// and accumulates parameter gradients into `grad`.
    pub fn step_backward(
        &self,
        theta: &[f64],
        cache: &GruStep,
        dh: &[f64],
        grad: &mut [f64],
    ) -> Vec<f64> {
        let (d, h) = (self.cfg.embed_dim, self.cfg.hidden);
        let l = self.layout;
        let x_off = l.e + cache.input as usize * d;
        let x = &theta[x_off..x_off + d];

        let mut dh_prev: Vec<f64> = (0..h).map(|i| dh[i] * (1.0 - cache.z[i])).collect();
        let dz: Vec<f64> = (0..h)
            .map(|i| dh[i] * (cache.h_cand[i] - cache.h_prev[i]))
            .collect();
        let dh_cand: Vec<f64> = (0..h).map(|i| dh[i] * cache.z[i]).collect();

        // candidate gate
        let da_h: Vec<f64> = (0..h)
            .map(|i| dh_cand[i] * (1.0 - cache.h_cand[i] * cache.h_cand[i]))
            .collect();
        let gated: Vec<f64> = cache
            .r
            .iter()
            .zip(&cache.h_prev)
            .map(|(a, b)| a * b)
            .collect();
        outer_add(&mut grad[l.wh..l.wh + h * d], h, d, &da_h, x);
        outer_add(&mut grad[l.uh..l.uh + h * h], h, h, &da_h, &gated);
        for (g, &v) in grad[l.bh..l.bh + h].iter_mut().zip(&da_h) {
            *g += v;
        }
        let mut dgated = vec![0.0; h];
        matvec_t_add(&theta[l.uh..l.uh + h * h], h, h, &da_h, &mut dgated);
        let dr: Vec<f64> = (0..h).map(|i| dgated[i] * cache.h_prev[i]).collect();
        for i in 0..h {
            dh_prev[i] += dgated[i] * cache.r[i];
        }
        let mut dx = vec![0.0; d];
        matvec_t_add(&theta[l.wh..l.wh + h * d], h, d, &da_h, &mut dx);

        // reset gate
        let da_r: Vec<f64> = (0..h)
            .map(|i| dr[i] * cache.r[i] * (1.0 - cache.r[i]))
            .collect();
        outer_add(&mut grad[l.wr..l.wr + h * d], h, d, &da_r, x);
        outer_add(&mut grad[l.ur..l.ur + h * h], h, h, &da_r, &cache.h_prev);
        for (g, &v) in grad[l.br..l.br + h].iter_mut().zip(&da_r) {
            *g += v;
        }
        matvec_t_add(&theta[l.ur..l.ur + h * h], h, h, &da_r, &mut dh_prev);
        matvec_t_add(&theta[l.wr..l.wr + h * d], h, d, &da_r, &mut dx);

        // update gate
        let da_z: Vec<f64> = (0..h)
            .map(|i| dz[i] * cache.z[i] * (1.0 - cache.z[i]))
            .collect();
        outer_add(&mut grad[l.wz..l.wz + h * d], h, d, &da_z, x);
        outer_add(&mut grad[l.uz..l.uz + h * h], h, h, &da_z, &cache.h_prev);
        for (g, &v) in grad[l.bz..l.bz + h].iter_mut().zip(&da_z) {
            *g += v;
        }
        matvec_t_add(&theta[l.uz..l.uz + h * h], h, h, &da_z, &mut dh_prev);
        matvec_t_add(&theta[l.wz..l.wz + h * d], h, d, &da_z, &mut dx);

        // embedding row
        for (g, &v) in grad[x_off..x_off + d].iter_mut().zip(&dx) {
            *g += v;
        }
        dh_prev
    }

    /// Glorot-style init for the cell block inside `theta`; biases zero.
    pub fn init_params<R: Rng>(&self, theta: &mut [f64], rng: &mut R) {
        let (v, d, h) = (self.cfg.vocab_size, self.cfg.embed_dim, self.cfg.hidden);
        let l = self.layout;
        let bound_e = (6.0 / (v as f64 + d as f64)).sqrt();
        for w in &mut theta[l.e..l.e + v * d] {
            *w = rng.gen_range(-bound_e..bound_e);
        }
        let bound_w = (6.0 / (d as f64 + h as f64)).sqrt();
        let bound_u = (6.0 / (2.0 * h as f64)).sqrt();
        for (off, len, bound) in [
            (l.wz, h * d, bound_w),
            (l.uz, h * h, bound_u),
            (l.wr, h * d, bound_w),
            (l.ur, h * h, bound_u),
            (l.wh, h * d, bound_w),
            (l.uh, h * h, bound_u),
        ] {
            for w in &mut theta[off..off + len] {
                *w = rng.gen_range(-bound..bound);
            }
        }
    }
}

/// Many-to-one GRU classifier: final hidden state through a dense sigmoid
/// readout.
#[derive(Debug, Clone)]
pub struct GruClassifier {
    cfg: GruConfig,
    gru: GruLayout,
    readout_w: usize,
    readout_b: usize,
    total: usize,
    theta: Vec<f64>,
}

impl GruClassifier {
    pub fn init<R: Rng>(cfg: GruConfig, rng: &mut R) -> GruClassifier {
        let gru = gru_layout(&cfg, 0);
        let readout_w = gru.end;
        let readout_b = readout_w + cfg.hidden;
        let total = readout_b + 1;
        let mut theta = vec![0.0; total];
        let cell = GruCell { cfg: &cfg, layout: gru };
        cell.init_params(&mut theta, rng);
        let bound = (6.0 / (cfg.hidden as f64 + 1.0)).sqrt();
        for w in &mut theta[readout_w..readout_b] {
            *w = rng.gen_range(-bound..bound);
        }
        GruClassifier {
            cfg,
            gru,
            readout_w,
            readout_b,
            total,
            theta,
        }
    }

    pub fn config(&self) -> &GruConfig {
        &self.cfg
    }

    pub fn param_count(&self) -> usize {
        self.total
    }

    /// Rebuilds a classifier around an existing flat parameter vector.
    pub fn from_theta(cfg: GruConfig, theta: Vec<f64>) -> GruClassifier {
        let gru = gru_layout(&cfg, 0);
        let readout_w = gru.end;
        let readout_b = readout_w + cfg.hidden;
        let total = readout_b + 1;
        assert_eq!(theta.len(), total);
        GruClassifier {
            cfg,
            gru,
            readout_w,
            readout_b,
            total,
            theta,
        }
    }

    fn cell(&self) -> GruCell<'_> {
        GruCell {
            cfg: &self.cfg,
            layout: self.gru,
        }
    }

    /// Hidden states after each step; exposed for the range invariant.
    pub fn hidden_states(&self, seq: &[u32]) -> Vec<Vec<f64>> {
        let cell = self.cell();
        let mut h = vec![0.0; self.cfg.hidden];
        let mut out = Vec::with_capacity(seq.len());
        for &s in seq {
            let (next, _) = cell.step(&self.theta, s, &h);
            h = next;
            out.push(h.clone());
        }
        out
    }

    fn forward(&self, seq: &[u32]) -> (f64, Vec<GruStep>, Vec<f64>) {
        let cell = self.cell();
        let mut h = vec![0.0; self.cfg.hidden];
        let mut caches = Vec::with_capacity(seq.len());
        for &s in seq {
            let (next, cache) = cell.step(&self.theta, s, &h);
            h = next;
            caches.push(cache);
        }
        let w = &self.theta[self.readout_w..self.readout_b];
        let logit = self.theta[self.readout_b]
            + w.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
        (logit, caches, h)
    }
}

impl SequenceClassifier for GruClassifier {
    fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn forward_logit(&self, seq: &[u32]) -> f64 {
        self.forward(seq).0
    }

    fn batch_gradient(&self, batch: &[(&[u32], u8)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.total];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        let cell = self.cell();
        for &(seq, label) in batch {
            let (logit, caches, h_last) = self.forward(seq);
            let (sample_loss, dlogit) = bce_from_logit(logit, label);
            loss += sample_loss * scale;
            let dlogit = dlogit * scale;

            grad[self.readout_b] += dlogit;
            let w = &self.theta[self.readout_w..self.readout_b];
            let mut dh: Vec<f64> = w.iter().map(|&wi| dlogit * wi).collect();
            for (g, &hv) in grad[self.readout_w..self.readout_b]
                .iter_mut()
                .zip(&h_last)
            {
                *g += dlogit * hv;
            }
            for cache in caches.iter().rev() {
                dh = cell.step_backward(&self.theta, cache, &dh, &mut grad);
            }
        }
        (loss, grad)
    }
}
