//! Soft-margin kernel SVM trained by sequential pairwise optimization on the
//! dual, with probabilities from Platt scaling fitted on out-of-fold
//! decision values.

use super::jaccard::{jaccard_unchecked, GramMatrix};
use super::{check_binary_labels, ModelError, ProbClassifier};
use crate::features::{FeatureMode, NGramSet};

const SMO_TOL: f64 = 1e-3;
const SMO_TAU: f64 = 1e-12;

/// Kernel lookup over a subset of a precomputed Gram matrix, so inner folds
/// reuse the outer fold's kernel evaluations.
struct KernelView<'a> {
    gram: &'a GramMatrix,
    rows: &'a [usize],
}

impl KernelView<'_> {
    fn n(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram.get(self.rows[i], self.rows[j])
    }
}

struct SmoSolution {
    alpha: Vec<f64>,
    bias: f64,
    gap: f64,
    objective: f64,
    iterations: usize,
}

/// First-order working-set SMO: repeatedly picks the maximal violating pair
/// and solves the two-variable subproblem analytically, until the KKT gap
/// drops below `tol`.
fn smo(view: &KernelView<'_>, y: &[f64], c: f64, tol: f64) -> Result<SmoSolution, ModelError> {
    let n = view.n();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iterations = 1_000_000usize.max(200 * n);

    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    loop {
        // max violating pair
        let mut i_best: Option<usize> = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j_best: Option<usize> = None;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let score = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && score > m_up {
                m_up = score;
                i_best = Some(t);
            }
            if in_low && score < m_low {
                m_low = score;
                j_best = Some(t);
            }
        }
        let (i, j) = match (i_best, j_best) {
            (Some(i), Some(j)) => (i, j),
            _ => break,
        };
        gap = m_up - m_low;
        if gap <= tol {
            break;
        }
        if iterations >= max_iterations {
            return Err(ModelError::Numerical(format!(
                "SMO did not reach tolerance {} in {} iterations (gap {})",
                tol, max_iterations, gap
            )));
        }
        iterations += 1;

        // Two-variable line search along alpha_i += y_i t, alpha_j -= y_j t.
        let eta = (view.k(i, i) + view.k(j, j) - 2.0 * view.k(i, j)).max(SMO_TAU);
        let mut step = gap / eta;
        let upper_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let upper_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        step = step.min(upper_i).min(upper_j);
        alpha[i] += y[i] * step;
        alpha[j] -= y[j] * step;
        for t in 0..n {
            grad[t] += step * y[t] * (view.k(t, i) - view.k(t, j));
        }
    }

    let bias = match (m_up_final(&alpha, &grad, y, c), m_low_final(&alpha, &grad, y, c)) {
        (Some(up), Some(low)) => (up + low) / 2.0,
        _ => 0.0,
    };
    // dual objective: sum(alpha) - 1/2 sum alpha_i alpha_j y_i y_j K
    // grad = Q alpha - 1, so alpha . (grad - (-1)) = alpha^T Q alpha... use
    // objective = 1/2 alpha.(grad) + 1/2 alpha.(-1) ... f = 1/2 a'Qa - e'a,
    // and grad = Qa - e, hence f = 1/2 a.(grad + (-e))  = 1/2 a.(grad) - 1/2 e.a
    let objective: f64 = alpha
        .iter()
        .zip(grad.iter())
        .map(|(&a, &g)| 0.5 * a * (g - 1.0))
        .sum();

    Ok(SmoSolution {
        alpha,
        bias,
        gap,
        objective,
        iterations,
    })
}

fn m_up_final(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Option<f64> {
    (0..alpha.len())
        .filter(|&t| (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0))
        .map(|t| -y[t] * grad[t])
        .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

fn m_low_final(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Option<f64> {
    (0..alpha.len())
        .filter(|&t| (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c))
        .map(|t| -y[t] * grad[t])
        .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
}

/// Sigmoid parameters (a, b) minimizing the calibration cross-entropy on
/// (decision value, target) pairs, by Newton iterations with step halving.
/// Targets use the standard smoothed labels.
fn fit_platt(decisions: &[f64], labels: &[u8]) -> (f64, f64) {
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&y| if y == 1 { hi } else { lo })
        .collect();

    let nll = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| {
                let z = a * f + b;
                // -[t log p + (1-t) log(1-p)], p = 1/(1+e^z), stably:
                if z >= 0.0 {
                    t * z + (1.0 + (-z).exp()).ln()
                } else {
                    (t - 1.0) * z + (1.0 + z.exp()).ln()
                }
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = nll(a, b);
    let sigma = 1e-12;
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21) = (sigma, sigma, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&f, &t) in decisions.iter().zip(&targets) {
            let z = a * f + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-10 && g2.abs() < 1e-10 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut stepsize = 1.0;
        while stepsize >= 1e-10 {
            let (na, nb) = (a + stepsize * da, b + stepsize * db);
            let nf = nll(na, nb);
            if nf < fval + 1e-4 * stepsize * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            stepsize /= 2.0;
        }
        if stepsize < 1e-10 {
            break;
        }
    }
    (a, b)
}

fn platt_probability(a: f64, b: f64, decision: f64) -> f64 {
    let z = a * decision + b;
    let p = if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    };
    // strictly inside (0,1) by construction of the sigmoid
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
}

/// A fitted Jaccard-kernel SVM with Platt-calibrated probabilities.
#[derive(Debug, Clone)]
pub struct SvmModel {
    support: Vec<NGramSet>,
    /// alpha_i * y_i per support sample.
    coef: Vec<f64>,
    bias: f64,
    platt_a: f64,
    platt_b: f64,
    c: f64,
    vocab_id: u64,
    dual_gap: f64,
    dual_objective: f64,
    iterations: usize,
}

impl SvmModel {
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn support_count(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[NGramSet] {
        &self.support
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn platt(&self) -> (f64, f64) {
        (self.platt_a, self.platt_b)
    }

    /// Final KKT violation gap of the dual solve.
    pub fn dual_gap(&self) -> f64 {
        self.dual_gap
    }

    pub fn dual_objective(&self) -> f64 {
        self.dual_objective
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Equality-constraint residual: sum of alpha_i y_i over support.
    pub fn sum_alpha_y(&self) -> f64 {
        self.coef.iter().sum()
    }

    /// Raw decision value sum(alpha_i y_i k(x, sv_i)) + b.
    pub fn decision(&self, x: &NGramSet) -> Result<f64, ModelError> {
        if x.vocab_id() != self.vocab_id {
            return Err(ModelError::VocabularyMismatch(self.vocab_id, x.vocab_id()));
        }
        if x.mode() != FeatureMode::Set {
            return Err(ModelError::WrongMode {
                expected: FeatureMode::Set.to_string(),
                got: x.mode().to_string(),
            });
        }
        Ok(self
            .support
            .iter()
            .zip(&self.coef)
            .map(|(sv, &w)| w * jaccard_unchecked(x, sv))
            .sum::<f64>()
            + self.bias)
    }

    pub(crate) fn from_raw(
        support: Vec<NGramSet>,
        coef: Vec<f64>,
        bias: f64,
        platt_a: f64,
        platt_b: f64,
        c: f64,
        vocab_id: u64,
    ) -> SvmModel {
        SvmModel {
            support,
            coef,
            bias,
            platt_a,
            platt_b,
            c,
            vocab_id,
            dual_gap: 0.0,
            dual_objective: 0.0,
            iterations: 0,
        }
    }
}

impl ProbClassifier for SvmModel {
    fn predict_proba(&self, features: &[NGramSet]) -> Result<Vec<f64>, ModelError> {
        features
            .iter()
            .map(|x| {
                self.decision(x)
                    .map(|f| platt_probability(self.platt_a, self.platt_b, f))
            })
            .collect()
    }
}

/// Trains on a precomputed Gram matrix restricted to `rows` (training sample
/// indices into `sets`/`labels`). Platt scaling uses out-of-fold decision
/// values from a deterministic internal 3-fold split; when a split would
/// leave a fold single-class, in-sample decision values are used instead.
pub fn svm_fit_subset(
    gram: &GramMatrix,
    sets: &[NGramSet],
    labels: &[u8],
    rows: &[usize],
    c: f64,
) -> Result<SvmModel, ModelError> {
    if c <= 0.0 {
        return Err(ModelError::Numerical("C must be positive".into()));
    }
    let sub_labels: Vec<u8> = rows.iter().map(|&r| labels[r]).collect();
    check_binary_labels(&sub_labels, rows.len())?;
    let y: Vec<f64> = sub_labels
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();

    // Out-of-fold decision values for calibration.
    let n = rows.len();
    let fold_of = internal_fold_assignment(&sub_labels, 3);
    let mut decisions = vec![f64::NAN; n];
    let mut usable = true;
    for fold in 0..3 {
        let train_local: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let held_local: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
        if held_local.is_empty() {
            continue;
        }
        let train_labels: Vec<u8> = train_local.iter().map(|&i| sub_labels[i]).collect();
        let pos = train_labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == train_labels.len() {
            usable = false;
            break;
        }
        let train_rows: Vec<usize> = train_local.iter().map(|&i| rows[i]).collect();
        let view = KernelView {
            gram,
            rows: &train_rows,
        };
        let y_train: Vec<f64> = train_local.iter().map(|&i| y[i]).collect();
        let solution = smo(&view, &y_train, c, SMO_TOL)?;
        for &h in &held_local {
            let mut f = solution.bias;
            for (t, &tr) in train_local.iter().enumerate() {
                if solution.alpha[t] > 0.0 {
                    f += solution.alpha[t] * y[tr] * gram.get(rows[tr], rows[h]);
                }
            }
            decisions[h] = f;
        }
    }

    // Final dual solve on the whole training subset.
    let view = KernelView { gram, rows };
    let solution = smo(&view, &y, c, SMO_TOL)?;

    if !usable || decisions.iter().any(|d| d.is_nan()) {
        for i in 0..n {
            let mut f = solution.bias;
            for t in 0..n {
                if solution.alpha[t] > 0.0 {
                    f += solution.alpha[t] * y[t] * gram.get(rows[t], rows[i]);
                }
            }
            decisions[i] = f;
        }
    }
    let (platt_a, platt_b) = fit_platt(&decisions, &sub_labels);

    let mut support = Vec::new();
    let mut coef = Vec::new();
    for (t, &row) in rows.iter().enumerate() {
        if solution.alpha[t] > 0.0 {
            support.push(sets[row].clone());
            coef.push(solution.alpha[t] * y[t]);
        }
    }
    let vocab_id = sets
        .first()
        .map(|s| s.vocab_id())
        .unwrap_or_default();
    Ok(SvmModel {
        support,
        coef,
        bias: solution.bias,
        platt_a,
        platt_b,
        c,
        vocab_id,
        dual_gap: solution.gap,
        dual_objective: solution.objective,
        iterations: solution.iterations,
    })
}

/// Deterministic stratified fold assignment by position within each class.
fn internal_fold_assignment(labels: &[u8], k: usize) -> Vec<usize> {
    let mut fold_of = vec![0usize; labels.len()];
    for class in [0u8, 1u8] {
        for (j, i) in (0..labels.len()).filter(|&i| labels[i] == class).enumerate() {
            fold_of[i] = j % k;
        }
    }
    fold_of
}

/// Trains on a full precomputed Gram matrix.
pub fn svm_fit_precomputed(
    gram: &GramMatrix,
    sets: &[NGramSet],
    labels: &[u8],
    c: f64,
) -> Result<SvmModel, ModelError> {
    let rows: Vec<usize> = (0..sets.len()).collect();
    svm_fit_subset(gram, sets, labels, &rows, c)
}

/// Computes the Gram matrix and trains.
pub fn svm_fit(sets: &[NGramSet], labels: &[u8], c: f64) -> Result<SvmModel, ModelError> {
    let gram = GramMatrix::compute(sets)?;
    svm_fit_precomputed(&gram, sets, labels, c)
}
