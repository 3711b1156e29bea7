//! Exact t-SNE projection to two dimensions.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{DistanceMatrix, MatrixView};
use crate::domain::Metric;
use crate::error::{Error, Result};
use crate::rng::rng;

const LOG_SIGMA_LO: f64 = -9.210_340_371_976_184; // ln 1e-4
const LOG_SIGMA_HI: f64 = 9.210_340_371_976_184; // ln 1e4
const PERPLEXITY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub final_momentum: f64,
    pub early_exaggeration: f64,
    /// Iterations run with exaggeration and the initial momentum.
    pub exaggeration_iters: usize,
    pub seed: u64,
    pub metric: Metric,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            momentum: 0.5,
            final_momentum: 0.8,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 0,
            metric: Metric::Euclidean,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 10 {
            return Err(Error::invalid(format!("t-SNE needs at least 10 rows, got {n}")));
        }
        if !(self.perplexity > 0.0) || self.perplexity * 3.0 >= n as f64 {
            return Err(Error::invalid(format!(
                "perplexity {} must be positive and below n/3 = {:.2}",
                self.perplexity,
                n as f64 / 3.0
            )));
        }
        if self.iterations < self.exaggeration_iters || self.iterations < 250 {
            return Err(Error::invalid("t-SNE needs at least 250 iterations"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Bandwidth found for one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub sigma: f64,
    /// Perplexity of the resulting conditional distribution.
    pub perplexity: f64,
    /// The target was out of reach; `sigma` is the bracket midpoint.
    pub saturated: bool,
}

// conditional distribution and its entropy (nats) for one bandwidth
fn row_distribution(d2: &[f64], d2_min: f64, sigma: f64, out: &mut [f64]) -> f64 {
    let beta = 1.0 / (2.0 * sigma * sigma);
    let mut z = 0.0;
    for (o, &v) in out.iter_mut().zip(d2) {
        *o = (-(v - d2_min) * beta).exp();
        z += *o;
    }
    let mut weighted = 0.0;
    for (o, &v) in out.iter_mut().zip(d2) {
        *o /= z;
        weighted += *o * (v - d2_min) * beta;
    }
    z.ln() + weighted
}

/// Gaussian bandwidth whose conditional distribution over `distances` has
/// the target perplexity. The conditional distribution is written to `out`.
pub fn calibrate_sigma_into(distances: &[f64], target_perplexity: f64, out: &mut [f64]) -> Result<Calibration> {
    if distances.is_empty() {
        return Err(Error::invalid("cannot calibrate an empty distance row"));
    }
    if distances.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("distance row contains non-finite values"));
    }
    let max = distances.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    let scale = if max > 0.0 { max } else { 1.0 };
    let d2: Vec<f64> = distances.iter().map(|d| (d / scale) * (d / scale)).collect();
    let d2_min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let target = target_perplexity.log2();
    let log2_perp = |h: f64| h / std::f64::consts::LN_2;

    let (mut lo, mut hi) = (LOG_SIGMA_LO, LOG_SIGMA_HI);
    let h_lo = log2_perp(row_distribution(&d2, d2_min, lo.exp(), out));
    let h_hi = log2_perp(row_distribution(&d2, d2_min, hi.exp(), out));
    if h_lo > target + PERPLEXITY_TOL || h_hi < target - PERPLEXITY_TOL {
        let mid = ((lo + hi) / 2.0).exp();
        let h = row_distribution(&d2, d2_min, mid, out);
        return Ok(Calibration {
            sigma: mid * scale,
            perplexity: h.exp(),
            saturated: true,
        });
    }
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo + hi) / 2.0;
        let h = log2_perp(row_distribution(&d2, d2_min, mid.exp(), out));
        let err = (h - target).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if err <= PERPLEXITY_TOL {
            break;
        }
        if h > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let sigma = best.1.exp();
    let h = row_distribution(&d2, d2_min, sigma, out);
    Ok(Calibration {
        sigma: sigma * scale,
        perplexity: h.exp(),
        saturated: best.0 > PERPLEXITY_TOL,
    })
}

pub fn calibrate_sigma(distances: &[f64], target_perplexity: f64) -> Result<Calibration> {
    let mut out = vec![0.0; distances.len()];
    calibrate_sigma_into(distances, target_perplexity, &mut out)
}

/// Symmetrized joint affinities `p_ij = (p_j|i + p_i|j) / 2n`, condensed.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProbabilities {
    pub n: usize,
    pub condensed: Vec<f64>,
    pub calibrations: Vec<Calibration>,
}

impl JointProbabilities {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.condensed[DistanceMatrix::index(self.n, i, j)]
        }
    }

    pub fn total(&self) -> f64 {
        2.0 * self.condensed.iter().sum::<f64>()
    }
}

/// Row-conditional affinities, dense `n × n` with a zero diagonal.
pub fn conditional_probabilities(dm: &DistanceMatrix, perplexity: f64) -> Result<(Vec<f64>, Vec<Calibration>)> {
    let n = dm.n();
    let mut cond = vec![0.0; n * n];
    let calibrations = cond
        .par_chunks_mut(n.max(1))
        .enumerate()
        .map(|(i, row)| {
            let dist: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dm.get(i, j)).collect();
            let mut p = vec![0.0; n - 1];
            let cal = calibrate_sigma_into(&dist, perplexity, &mut p)?;
            for (j, v) in (0..n).filter(|&j| j != i).zip(p) {
                row[j] = v;
            }
            Ok(cal)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((cond, calibrations))
}

pub fn joint_probabilities(dm: &DistanceMatrix, perplexity: f64) -> Result<JointProbabilities> {
    let n = dm.n();
    let (cond, calibrations) = conditional_probabilities(dm, perplexity)?;
    let mut condensed = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in i + 1..n {
            condensed.push((cond[i * n + j] + cond[j * n + i]) / denom);
        }
    }
    Ok(JointProbabilities {
        n,
        condensed,
        calibrations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    /// `n × 2`, row-major, centered.
    pub coords: Vec<f64>,
    /// `(iteration, KL(P‖Q))` recorded every 50 iterations and at the end.
    pub kl_trace: Vec<(usize, f64)>,
    pub saturated_rows: usize,
}

impl Embedding {
    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.coords[2 * i], self.coords[2 * i + 1]]
    }

    pub fn kl_at(&self, iteration: usize) -> Option<f64> {
        self.kl_trace.iter().find(|(it, _)| *it == iteration).map(|e| e.1)
    }

    pub fn final_kl(&self) -> f64 {
        self.kl_trace.last().map_or(f64::NAN, |e| e.1)
    }
}

// Student-t kernel values 1 / (1 + |y_i − y_j|²), condensed
fn kernel(y: &[f64], n: usize) -> Vec<f64> {
    let mut num = vec![0.0; n * n.saturating_sub(1) / 2];
    let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n);
    let mut rest = num.as_mut_slice();
    for i in 0..n {
        let (head, tail) = rest.split_at_mut(n - i - 1);
        rows.push((i, head));
        rest = tail;
    }
    rows.into_par_iter().for_each(|(i, out)| {
        let (xi, yi) = (y[2 * i], y[2 * i + 1]);
        for (o, j) in out.iter_mut().zip(i + 1..n) {
            let dx = xi - y[2 * j];
            let dy = yi - y[2 * j + 1];
            *o = 1.0 / (1.0 + dx * dx + dy * dy);
        }
    });
    num
}

/// KL(P‖Q) of an embedding `y` (`n × 2`).
pub fn kl_divergence(p: &JointProbabilities, y: &[f64]) -> f64 {
    let num = kernel(y, p.n);
    let z = 2.0 * num.iter().sum::<f64>();
    p.condensed
        .iter()
        .zip(&num)
        .filter(|(pij, _)| **pij > 0.0)
        .map(|(pij, q)| 2.0 * pij * (pij / (q / z)).ln())
        .sum()
}

fn center(y: &mut [f64]) {
    let n = y.len() / 2;
    for axis in 0..2 {
        let mean = y.iter().skip(axis).step_by(2).sum::<f64>() / n as f64;
        for v in y.iter_mut().skip(axis).step_by(2) {
            *v -= mean;
        }
    }
}

/// Embeds the rows of `x` in two dimensions.
pub fn tsne(x: MatrixView<'_>, cfg: &TsneConfig) -> Result<Embedding> {
    let n = x.n_rows();
    cfg.validate(n)?;
    let dm = DistanceMatrix::compute(x, cfg.metric);
    let p = joint_probabilities(&dm, cfg.perplexity)?;
    drop(dm);
    tsne_from_affinities(&p, cfg)
}

pub fn tsne_from_affinities(p: &JointProbabilities, cfg: &TsneConfig) -> Result<Embedding> {
    let n = p.n;
    cfg.validate(n)?;
    let mut r = rng(cfg.seed);
    let init = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<f64> = (0..2 * n).map(|_| init.sample(&mut r)).collect();
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut kl_trace = Vec::new();

    for iter in 0..cfg.iterations {
        if iter % 50 == 0 || iter == cfg.exaggeration_iters {
            kl_trace.push((iter, kl_divergence(p, &y)));
        }
        let early = iter < cfg.exaggeration_iters;
        let (exag, momentum) = if early {
            (cfg.early_exaggeration, cfg.momentum)
        } else {
            (1.0, cfg.final_momentum)
        };
        let num = kernel(&y, n);
        let z = 2.0 * num.iter().sum::<f64>();
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let idx = DistanceMatrix::index(n, i, j);
                    let q = num[idx];
                    let mult = (exag * p.condensed[idx] - q / z) * q;
                    g[0] += mult * (y[2 * i] - y[2 * j]);
                    g[1] += mult * (y[2 * i + 1] - y[2 * j + 1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for (idx, g) in grad.iter().flatten().enumerate() {
            let gain = &mut gains[idx];
            *gain = if (*g > 0.0) != (update[idx] > 0.0) {
                *gain + 0.2
            } else {
                (*gain * 0.8).max(0.01)
            };
            update[idx] = momentum * update[idx] - cfg.learning_rate * *gain * g;
            y[idx] += update[idx];
        }
        center(&mut y);
    }
    kl_trace.push((cfg.iterations, kl_divergence(p, &y)));
    Ok(Embedding {
        coords: y,
        kl_trace,
        saturated_rows: p.calibrations.iter().filter(|c| c.saturated).count(),
    })
}
