//! Binary logistic regression on standardized features, fitted by damped
//! Newton iterations.

use serde::{Deserialize, Serialize};

use crate::normal::{sigmoid, softplus};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop once the gradient norm drops below this.
    pub grad_tol: f64,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 10_000,
            grad_tol: 1e-8,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Weights in the original (unstandardized) feature space.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
}

impl LogisticModel {
    #[inline]
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        crate::label_sign(self.decision(x))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `H x = g` for symmetric positive definite `H` (row-major `q × q`)
/// by Cholesky; `None` when `H` is not numerically positive definite.
fn solve_spd(h: &[f64], g: &[f64], q: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; q * q];
    let diag_max = (0..q).map(|i| h[i * q + i]).fold(0.0, f64::max);
    for i in 0..q {
        for j in 0..=i {
            let mut sum = h[i * q + j];
            for k in 0..j {
                sum -= l[i * q + k] * l[j * q + k];
            }
            if i == j {
                if sum <= 1e-14 * diag_max || !sum.is_finite() {
                    return None;
                }
                l[i * q + i] = sum.sqrt();
            } else {
                l[i * q + j] = sum / l[j * q + j];
            }
        }
    }
    let mut y = vec![0.0; q];
    for i in 0..q {
        let s: f64 = (0..i).map(|k| l[i * q + k] * y[k]).sum();
        y[i] = (g[i] - s) / l[i * q + i];
    }
    let mut x = vec![0.0; q];
    for i in (0..q).rev() {
        let s: f64 = (i + 1..q).map(|k| l[k * q + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * q + i];
    }
    Some(x)
}

/// Fits `P(y = 1 | x) = sigmoid(wᵀx + b)` to ±1 labels. `features` is
/// row-major `n × p`.
pub fn fit(features: &[f64], labels: &[f64], p: usize, opts: &FitOptions) -> Result<LogisticModel> {
    let n = labels.len();
    if n == 0 || p == 0 {
        return Err(Error::Empty("logistic regression data"));
    }
    if features.len() != n * p {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: features.len(),
        });
    }
    let nf = n as f64;
    let mut mean = vec![0.0; p];
    for row in features.chunks_exact(p) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / nf;
        }
    }
    let mut scale = vec![0.0; p];
    for row in features.chunks_exact(p) {
        for j in 0..p {
            scale[j] += (row[j] - mean[j]).powi(2) / nf;
        }
    }
    // constant columns carry no information; keep them inert
    for s in scale.iter_mut() {
        *s = if *s > 1e-24 { s.sqrt() } else { 0.0 };
    }
    let z: Vec<f64> = features
        .chunks_exact(p)
        .flat_map(|row| (0..p).map(|j| if scale[j] > 0.0 { (row[j] - mean[j]) / scale[j] } else { 0.0 }).collect::<Vec<_>>())
        .collect();

    // parameters θ = (w, b) with the bias last
    let q = p + 1;
    let eval = |theta: &[f64]| -> f64 {
        let (w, b) = (&theta[..p], theta[p]);
        let mut loss = 0.0;
        for (row, &y) in z.chunks_exact(p).zip(labels) {
            let margin = y * (b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>());
            loss += softplus(-margin);
        }
        loss / nf + 0.5 * opts.l2 * w.iter().map(|v| v * v).sum::<f64>()
    };
    let derivs = |theta: &[f64], g: &mut [f64], h: &mut [f64]| {
        let (w, b) = (&theta[..p], theta[p]);
        g.iter_mut().for_each(|v| *v = 0.0);
        h.iter_mut().for_each(|v| *v = 0.0);
        let mut zi = vec![1.0; q];
        for (row, &y) in z.chunks_exact(p).zip(labels) {
            zi[..p].copy_from_slice(row);
            let margin = y * (b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>());
            let s = sigmoid(-margin);
            let c = -y * s / nf;
            let curv = s * (1.0 - s) / nf;
            for r in 0..q {
                g[r] += c * zi[r];
                for col in 0..=r {
                    h[r * q + col] += curv * zi[r] * zi[col];
                }
            }
        }
        for r in 0..p {
            g[r] += opts.l2 * w[r];
            h[r * q + r] += opts.l2;
            if scale[r] == 0.0 {
                // inert column: zero gradient, keep the system regular
                h[r * q + r] += 1.0;
            }
        }
        for r in 0..q {
            for col in 0..r {
                h[col * q + r] = h[r * q + col];
            }
        }
    };

    // damped Newton; plain gradient steps only when the Hessian is unusable
    let mut theta = vec![0.0; q];
    let mut grad = vec![0.0; q];
    let mut hess = vec![0.0; q * q];
    let mut trial = vec![0.0; q];
    let mut iterations = 0;
    let mut converged = false;
    let mut loss = eval(&theta);
    let gd_step = 4.0 / (p as f64 + 1.0 + 4.0 * opts.l2);
    while iterations < opts.max_iter {
        derivs(&theta, &mut grad, &mut hess);
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2.sqrt() < opts.grad_tol {
            converged = true;
            break;
        }
        let dir = match solve_spd(&hess, &grad, q) {
            Some(d) if dot(&d, &grad) > 0.0 => d,
            _ => grad.iter().map(|g| g * gd_step).collect(),
        };
        let slope = dot(&dir, &grad);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for ((tr, th), d) in trial.iter_mut().zip(&theta).zip(&dir) {
                *tr = th - t * d;
            }
            let l = eval(&trial);
            if l <= loss - 1e-4 * t * slope {
                std::mem::swap(&mut theta, &mut trial);
                loss = l;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // no decrease representable at this precision
            converged = true;
            break;
        }
    }
    let (w, b) = (&theta[..p], theta[p]);
    // back to the original coordinates
    let mut weights = vec![0.0; p];
    let mut bias = b;
    for j in 0..p {
        if scale[j] > 0.0 {
            weights[j] = w[j] / scale[j];
            bias -= weights[j] * mean[j];
        }
    }
    Ok(LogisticModel {
        weights,
        bias,
        iterations,
        converged,
        final_loss: loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    #[test]
    fn recovers_known_logistic_model() {
        let mut r = rng::stream(1);
        let n = 20_000;
        let (w_true, b_true) = ([1.5, -0.7], 0.3);
        let mut x = Vec::with_capacity(2 * n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = r.sample(StandardNormal);
            let c: f64 = 3.0 * r.sample::<f64, _>(StandardNormal) + 1.0;
            let p = sigmoid(w_true[0] * a + w_true[1] * c + b_true);
            y.push(if r.random::<f64>() < p { 1.0 } else { -1.0 });
            x.push(a);
            x.push(c);
        }
        let m = fit(&x, &y, 2, &FitOptions::default()).unwrap();
        assert!(m.converged);
        assert!((m.weights[0] - 1.5).abs() < 0.1);
        assert!((m.weights[1] + 0.7).abs() < 0.05);
        assert!((m.bias - 0.3).abs() < 0.1);
    }

    #[test]
    fn separable_labels_are_fit_exactly() {
        let mut r = rng::stream(2);
        let n = 2000;
        let x: Vec<f64> = (0..2 * n).map(|_| r.sample(StandardNormal)).collect();
        let y: Vec<f64> = x.chunks_exact(2).map(|v| crate::label_sign(v[0] - 2.0 * v[1] + 0.1)).collect();
        let m = fit(&x, &y, 2, &FitOptions::default()).unwrap();
        let hits = x.chunks_exact(2).zip(&y).filter(|(v, &t)| m.predict(v) == t).count();
        assert!(hits as f64 / n as f64 > 0.995);
    }

    #[test]
    fn constant_columns_are_ignored() {
        let x = vec![1.0, 5.0, -1.0, 5.0, 2.0, 5.0, -2.0, 5.0];
        let y = vec![1.0, -1.0, 1.0, -1.0];
        let m = fit(&x, &y, 2, &FitOptions::default()).unwrap();
        assert_eq!(m.weights[1], 0.0);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(fit(&[1.0, 2.0, 3.0], &[1.0, -1.0], 2, &FitOptions::default()).is_err());
        assert!(fit(&[], &[], 2, &FitOptions::default()).is_err());
    }
}
