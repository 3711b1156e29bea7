use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dims, check_training, Classifier};
use crate::domain::MatrixView;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1.0,
            max_iter: 500,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
    pub iterations: usize,
    pub final_loss: f64,
    pub loss_trace: Vec<f64>,
}

// log(1 + e^z) without overflow
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

const CHUNK: usize = 4096;

/// Mean logistic loss plus `l2 / 2n · ‖w‖²`, and its gradient (weights then bias).
pub fn logistic_objective(x: MatrixView<'_>, y: &[usize], w: &[f64], b: f64, l2: f64) -> (f64, Vec<f64>) {
    let (n, d) = (x.n_rows(), x.n_cols());
    // fixed-size chunks reduced in order keep the sum independent of thread count
    let parts: Vec<(f64, Vec<f64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut loss = 0.0;
            let mut g = vec![0.0; d + 1];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let row = x.row(i);
                let z = b + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                let t = (y[i] == 1) as u8 as f64;
                loss += softplus(z) - t * z;
                let r = sigmoid(z) - t;
                for (gj, xj) in g.iter_mut().zip(row) {
                    *gj += r * xj;
                }
                g[d] += r;
            }
            (loss, g)
        })
        .collect();
    let nf = n as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (l, g) in parts {
        loss += l;
        for (a, v) in grad.iter_mut().zip(g) {
            *a += v;
        }
    }
    loss = loss / nf + l2 / (2.0 * nf) * w.iter().map(|v| v * v).sum::<f64>();
    for (j, gj) in grad.iter_mut().enumerate() {
        *gj /= nf;
        if j < d {
            *gj += l2 / nf * w[j];
        }
    }
    (loss, grad)
}

/// L2-regularized logistic regression by gradient descent with backtracking line search.
pub fn train_logreg(x: MatrixView<'_>, y: &[usize], cfg: &LogisticConfig) -> Result<LogisticModel> {
    check_training(x, y)?;
    if y.iter().any(|&c| c > 1) {
        return Err(Error::invalid("logistic regression needs binary labels"));
    }
    if cfg.l2 < 0.0 {
        return Err(Error::invalid("l2 penalty must be non-negative"));
    }
    let d = x.n_cols();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let (mut loss, mut grad) = logistic_objective(x, y, &w, b, cfg.l2);
    let mut trace = vec![loss];
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax <= cfg.tolerance {
            break;
        }
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        step *= 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let wn: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            let bn = b - step * grad[d];
            let (ln, gn) = logistic_objective(x, y, &wn, bn, cfg.l2);
            if ln <= loss - 0.5 * step * gnorm2 {
                accepted = Some((wn, bn, ln, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((wn, bn, ln, gn)) = accepted else {
            break;
        };
        w = wn;
        b = bn;
        loss = ln;
        grad = gn;
        trace.push(loss);
        iterations += 1;
    }
    Ok(LogisticModel {
        weights: w,
        bias: b,
        l2: cfg.l2,
        iterations,
        final_loss: loss,
        loss_trace: trace,
    })
}

impl Classifier for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn predict_proba(&self, x: MatrixView<'_>) -> Result<Vec<Vec<f64>>> {
        check_dims(self.weights.len(), x)?;
        Ok((0..x.n_rows())
            .map(|i| {
                let z = self.bias + x.row(i).iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
                let p = sigmoid(z);
                vec![1.0 - p, p]
            })
            .collect())
    }

    fn feature_importance(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.abs()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::accuracy;
    use crate::rng::rng;
    use rand::Rng;

    #[test]
    fn zero_iterations_is_a_coin_flip() {
        let v = [1.0, 2.0, 3.0];
        let x = MatrixView::new(&v, 1).unwrap();
        let m = train_logreg(x, &[0, 1, 1], &LogisticConfig { max_iter: 0, ..Default::default() }).unwrap();
        for p in m.predict_proba(x).unwrap() {
            assert_eq!(p, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn separable_points() {
        let v = [-1.0, 1.0];
        let x = MatrixView::new(&v, 1).unwrap();
        let cfg = LogisticConfig { l2: 1e-6, ..Default::default() };
        let m = train_logreg(x, &[0, 1], &cfg).unwrap();
        assert_eq!(accuracy(&[0, 1], &m.predict(x).unwrap()), 1.0);
        assert!(m.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut r = rng(21);
        let (n, d) = (40, 4);
        let v: Vec<f64> = (0..n * d).map(|_| r.random::<f64>() * 4.0 - 2.0).collect();
        let y: Vec<usize> = (0..n).map(|_| r.random_range(0..2)).collect();
        let x = MatrixView::new(&v, d).unwrap();
        let h = 1e-5;
        for _ in 0..20 {
            let w: Vec<f64> = (0..d).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
            let b = r.random::<f64>() - 0.5;
            let (_, g) = logistic_objective(x, &y, &w, b, 0.7);
            let mut fd = vec![0.0; d + 1];
            for j in 0..=d {
                let shifted = |delta: f64| {
                    let mut wj = w.clone();
                    let mut bj = b;
                    if j < d {
                        wj[j] += delta;
                    } else {
                        bj += delta;
                    }
                    logistic_objective(x, &y, &wj, bj, 0.7).0
                };
                fd[j] = (shifted(h) - shifted(-h)) / (2.0 * h);
            }
            let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let scale: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(diff / scale <= 1e-5, "relative error {}", diff / scale);
        }
    }

    #[test]
    fn importance_is_absolute_weight() {
        let m = LogisticModel {
            weights: vec![2.0, -3.0, 0.0],
            bias: 0.0,
            l2: 1.0,
            iterations: 0,
            final_loss: 0.0,
            loss_trace: vec![],
        };
        assert_eq!(m.feature_importance(), vec![2.0, 3.0, 0.0]);
    }

    #[test]
    fn non_finite_features_are_rejected() {
        let v = [1.0, f64::INFINITY];
        let x = MatrixView::new(&v, 1).unwrap();
        assert!(train_logreg(x, &[0, 1], &LogisticConfig::default()).is_err());
    }
}
