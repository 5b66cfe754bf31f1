//! Dense logistic regression by Newton iterations with step halving, used as
//! the stacker on top of the class-conditional language models. The convex
//! loss plus the halving contract makes training loss non-increasing.

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// weights[0] is the intercept; the rest follow standardized features.
    pub weights: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    /// Training loss after every accepted iteration, first entry is the
    /// initial loss.
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn standardize(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = x[0].len();
    let n = x.len() as f64;
    let mut means = vec![0.0; d];
    for row in x {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut scales = vec![0.0; d];
    for row in x {
        for j in 0..d {
            scales[j] += (row[j] - means[j]).powi(2) / n;
        }
    }
    for s in scales.iter_mut() {
        *s = s.sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    (means, scales)
}

impl LogisticModel {
    pub fn predict_proba_one(&self, features: &[f64]) -> f64 {
        let mut z = self.weights[0];
        for (j, &v) in features.iter().enumerate() {
            let scaled = (v - self.feature_means[j]) / self.feature_scales[j];
            z += self.weights[j + 1] * scaled;
        }
        sigmoid(z)
    }

    pub fn predict_proba(&self, features: &[Vec<f64>]) -> Vec<f64> {
        features
            .iter()
            .map(|row| self.predict_proba_one(row))
            .collect()
    }
}

/// Fits with a small L2 term (`l2`, on non-intercept weights) for stability
/// on separable data.
pub fn logistic_fit(
    x: &[Vec<f64>],
    labels: &[u8],
    l2: f64,
) -> Result<LogisticModel, ModelError> {
    if x.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if x.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            features: x.len(),
            labels: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(ModelError::SingleClass);
    }
    let d = x[0].len();
    let (means, scales) = standardize(x);
    let standardized: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            let mut out = Vec::with_capacity(d + 1);
            out.push(1.0);
            for j in 0..d {
                out.push((row[j] - means[j]) / scales[j]);
            }
            out
        })
        .collect();
    let dim = d + 1;
    let n = x.len() as f64;

    let loss = |w: &[f64]| -> f64 {
        let mut total = 0.0;
        for (row, &y) in standardized.iter().zip(labels) {
            let z: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
            // -log p(y | z), stable in both tails
            total += if y == 1 {
                if z >= 0.0 {
                    (1.0 + (-z).exp()).ln()
                } else {
                    -z + (1.0 + z.exp()).ln()
                }
            } else if z >= 0.0 {
                z + (1.0 + (-z).exp()).ln()
            } else {
                (1.0 + z.exp()).ln()
            };
        }
        let ridge: f64 = w.iter().skip(1).map(|v| v * v).sum::<f64>() * l2 / 2.0;
        total / n + ridge
    };

    let mut w = vec![0.0; dim];
    let mut history = vec![loss(&w)];
    for _ in 0..100 {
        // gradient and Hessian
        let mut grad = vec![0.0; dim];
        let mut hess = vec![0.0; dim * dim];
        for (row, &y) in standardized.iter().zip(labels) {
            let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            let p = sigmoid(z);
            let err = p - y as f64;
            let d2 = (p * (1.0 - p)).max(1e-10);
            for j in 0..dim {
                grad[j] += err * row[j] / n;
                for k in 0..dim {
                    hess[j * dim + k] += d2 * row[j] * row[k] / n;
                }
            }
        }
        for j in 1..dim {
            grad[j] += l2 * w[j];
            hess[j * dim + j] += l2;
        }
        for j in 0..dim {
            hess[j * dim + j] += 1e-10;
        }
        let grad_norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < 1e-10 {
            break;
        }
        let direction = solve_spd(&hess, &grad, dim)
            .ok_or_else(|| ModelError::Numerical("singular Hessian".into()))?;

        // step halving: never accept a loss increase
        let current = *history.last().unwrap();
        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1e-12 {
            let trial: Vec<f64> = w
                .iter()
                .zip(&direction)
                .map(|(wi, di)| wi - step * di)
                .collect();
            let trial_loss = loss(&trial);
            if trial_loss <= current {
                w = trial;
                history.push(trial_loss);
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break;
        }
    }

    Ok(LogisticModel {
        weights: w,
        feature_means: means,
        feature_scales: scales,
        loss_history: history,
    })
}

/// Cholesky solve of a symmetric positive definite system.
fn solve_spd(a: &[f64], b: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * dim + i] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    // forward then back substitution
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * dim + k] * y[k];
        }
        y[i] = sum / l[i * dim + i];
    }
    let mut x = vec![0.0; dim];
    for i in (0..dim).rev() {
        let mut sum = y[i];
        for k in (i + 1)..dim {
            sum -= l[k * dim + i] * x[k];
        }
        x[i] = sum / l[i * dim + i];
    }
    Some(x)
}
