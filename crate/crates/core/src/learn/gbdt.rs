use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Criterion, TreeParams};
use super::{check_dims, check_training, BinnedMatrix, Classifier, DecisionTree};
use crate::domain::MatrixView;
use crate::error::{Error, Result};

const PRIOR_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub l2_leaf: f64,
    pub min_child_weight: f64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_rounds: 300,
            learning_rate: 0.1,
            max_depth: 4,
            l2_leaf: 1.0,
            min_child_weight: 0.0,
        }
    }
}

/// Newton-boosted trees: logistic loss for two classes, softmax otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub n_features: usize,
    pub n_classes: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub l2_leaf: f64,
    /// One log-odds value for two classes, per-class log priors otherwise.
    pub base_score: Vec<f64>,
    /// `trees[round][output]`; one output for two classes, `n_classes` otherwise.
    pub trees: Vec<Vec<DecisionTree>>,
    /// Mean training log loss before the first round and after every round.
    pub loss_trace: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

impl GbdtModel {
    fn outputs(&self) -> usize {
        if self.n_classes == 2 {
            1
        } else {
            self.n_classes
        }
    }

    fn probs_from_scores(&self, s: &[f64]) -> Vec<f64> {
        if self.n_classes == 2 {
            let p = sigmoid(s[0]);
            vec![1.0 - p, p]
        } else {
            softmax(s)
        }
    }
}

fn log_loss(model: &GbdtModel, scores: &[Vec<f64>], y: &[usize]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(s, &c)| {
            if model.n_classes == 2 {
                // log(1 + e^{-z}) for the positive class, log(1 + e^{z}) otherwise
                let z = if c == 1 { s[0] } else { -s[0] };
                (-z).max(0.0) + (-z.abs()).exp().ln_1p()
            } else {
                let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                lse - s[c]
            }
        })
        .sum();
    total / y.len() as f64
}

/// Trains a gradient-boosted tree ensemble.
///
/// With a single class present no trees are grown and the model predicts the prior.
pub fn train_gbdt(x: MatrixView<'_>, y: &[usize], n_classes: usize, cfg: &GbdtConfig) -> Result<GbdtModel> {
    check_training(x, y)?;
    if n_classes < 2 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::invalid(format!("labels must lie in [0, {n_classes}) with n_classes >= 2")));
    }
    if !(cfg.learning_rate > 0.0) || cfg.l2_leaf < 0.0 || cfg.min_child_weight < 0.0 {
        return Err(Error::invalid("gbdt needs a positive learning rate and non-negative regularization"));
    }
    let (n, d) = (x.n_rows(), x.n_cols());
    let mut counts = vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    let prior: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 / n as f64).max(PRIOR_FLOOR))
        .collect();
    let base_score = if n_classes == 2 {
        vec![(prior[1] / prior[0]).ln()]
    } else {
        prior.iter().map(|p| p.ln()).collect()
    };
    let mut model = GbdtModel {
        n_features: d,
        n_classes,
        learning_rate: cfg.learning_rate,
        max_depth: cfg.max_depth,
        l2_leaf: cfg.l2_leaf,
        base_score,
        trees: Vec::new(),
        loss_trace: Vec::new(),
    };
    let outputs = model.outputs();
    let mut scores: Vec<Vec<f64>> = vec![model.base_score.clone(); n];
    model.loss_trace.push(log_loss(&model, &scores, y));
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Ok(model);
    }
    let rows: Vec<usize> = (0..n).collect();
    let binned = BinnedMatrix::fit(x, &rows);
    let params = TreeParams {
        max_depth: cfg.max_depth,
        features_per_split: None,
    };
    let mut grad = vec![vec![0.0; n]; outputs];
    let mut hess = vec![vec![0.0; n]; outputs];
    for _ in 0..cfg.n_rounds {
        for i in 0..n {
            let p = model.probs_from_scores(&scores[i]);
            if n_classes == 2 {
                grad[0][i] = p[1] - (y[i] == 1) as u8 as f64;
                hess[0][i] = p[1] * (1.0 - p[1]);
            } else {
                for c in 0..n_classes {
                    grad[c][i] = p[c] - (y[i] == c) as u8 as f64;
                    hess[c][i] = p[c] * (1.0 - p[c]);
                }
            }
        }
        let round: Vec<DecisionTree> = (0..outputs)
            .into_par_iter()
            .map(|c| {
                let crit = Criterion::Newton {
                    grad: &grad[c],
                    hess: &hess[c],
                    lambda: cfg.l2_leaf,
                    min_child_weight: cfg.min_child_weight,
                };
                let mut r: Vec<u32> = (0..n as u32).collect();
                let mut tree = grow_tree(&binned, &mut r, &crit, &params, None);
                for node in &mut tree.nodes {
                    if let super::Node::Leaf { value } = node {
                        value[0] *= cfg.learning_rate;
                    }
                }
                tree
            })
            .collect();
        for (i, s) in scores.iter_mut().enumerate() {
            for (c, tree) in round.iter().enumerate() {
                s[c] += tree.leaf_binned(&binned, i)[0];
            }
        }
        model.trees.push(round);
        model.loss_trace.push(log_loss(&model, &scores, y));
    }
    Ok(model)
}

impl Classifier for GbdtModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: MatrixView<'_>) -> Result<Vec<Vec<f64>>> {
        check_dims(self.n_features, x)?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let mut s = self.base_score.clone();
                for round in &self.trees {
                    for (c, tree) in round.iter().enumerate() {
                        s[c] += tree.leaf(x.row(i))[0];
                    }
                }
                self.probs_from_scores(&s)
            })
            .collect())
    }

    fn feature_importance(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for t in self.trees.iter().flatten() {
            t.accumulate_gain(&mut out);
        }
        out
    }
}
