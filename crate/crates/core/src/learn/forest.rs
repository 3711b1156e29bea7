use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Criterion, TreeParams};
use super::{check_dims, check_training, BinnedMatrix, Classifier, DecisionTree};
use crate::domain::MatrixView;
use crate::error::{Error, Result};
use crate::rng::{rng, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    /// `None` uses `round(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            max_depth: Some(8),
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub n_classes: usize,
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<DecisionTree>,
}

/// Random forest of Gini trees on bootstrap samples.
pub fn train_forest(x: MatrixView<'_>, y: &[usize], n_classes: usize, cfg: &ForestConfig) -> Result<ForestModel> {
    check_training(x, y)?;
    if n_classes < 2 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::invalid(format!("labels must lie in [0, {n_classes}) with n_classes >= 2")));
    }
    if cfg.n_trees == 0 {
        return Err(Error::invalid("forest needs at least one tree"));
    }
    let (n, d) = (x.n_rows(), x.n_cols());
    let rows: Vec<usize> = (0..n).collect();
    let binned = BinnedMatrix::fit(x, &rows);
    let m = cfg
        .features_per_split
        .unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1))
        .clamp(1, d);
    let params = TreeParams {
        max_depth: cfg.max_depth.unwrap_or(usize::MAX),
        features_per_split: Some(m),
    };
    let tree_seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|t| substream(cfg.seed, t)).collect();
    let trees: Vec<DecisionTree> = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut r = rng(s);
            let mut weight = vec![0.0; n];
            if cfg.bootstrap {
                for _ in 0..n {
                    weight[r.random_range(0..n)] += 1.0;
                }
            } else {
                weight.fill(1.0);
            }
            let mut sample: Vec<u32> = (0..n as u32).filter(|&i| weight[i as usize] > 0.0).collect();
            let crit = Criterion::Gini {
                y,
                weight: &weight,
                n_classes,
            };
            grow_tree(&binned, &mut sample, &crit, &params, Some(&mut r))
        })
        .collect();
    Ok(ForestModel {
        n_features: d,
        n_classes,
        max_depth: cfg.max_depth,
        features_per_split: m,
        tree_seeds,
        trees,
    })
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: MatrixView<'_>) -> Result<Vec<Vec<f64>>> {
        check_dims(self.n_features, x)?;
        let t = self.trees.len() as f64;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let mut p = vec![0.0; self.n_classes];
                for tree in &self.trees {
                    for (a, v) in p.iter_mut().zip(tree.leaf(x.row(i))) {
                        *a += v;
                    }
                }
                p.iter_mut().for_each(|v| *v /= t);
                p
            })
            .collect())
    }

    fn feature_importance(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for t in &self.trees {
            t.accumulate_gain(&mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::tree::grow_tree;

    #[test]
    fn xor_is_learned() {
        let v = [0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0];
        let y = [0, 1, 1, 0];
        let x = MatrixView::new(&v, 2).unwrap();
        let cfg = ForestConfig {
            n_trees: 50,
            max_depth: Some(2),
            features_per_split: Some(2),
            bootstrap: false,
            seed: 1,
        };
        let f = train_forest(x, &y, 2, &cfg).unwrap();
        assert_eq!(f.predict(x).unwrap(), y.to_vec());
    }

    #[test]
    fn xor_with_bootstrap_and_many_trees() {
        let v: Vec<f64> = (0..40).flat_map(|i| [(i % 2) as f64, ((i / 2) % 2) as f64]).collect();
        let y: Vec<usize> = (0..40).map(|i| (i % 2) ^ ((i / 2) % 2)).collect();
        let x = MatrixView::new(&v, 2).unwrap();
        let cfg = ForestConfig {
            n_trees: 100,
            max_depth: Some(2),
            seed: 2,
            ..Default::default()
        };
        let f = train_forest(x, &y, 2, &cfg).unwrap();
        assert_eq!(f.predict(x).unwrap(), y);
    }

    #[test]
    fn pure_labels_predict_with_certainty() {
        let v = [0.1, 0.5, 0.9, 0.3];
        let x = MatrixView::new(&v, 1).unwrap();
        let f = train_forest(x, &[1, 1, 1, 1], 2, &ForestConfig { n_trees: 5, ..Default::default() }).unwrap();
        for p in f.predict_proba(x).unwrap() {
            assert_eq!(p, vec![0.0, 1.0]);
        }
    }

    #[test]
    fn single_unbootstrapped_tree_equals_plain_tree() {
        let v: Vec<f64> = (0..60).map(|i| ((i * 37) % 17) as f64).collect();
        let y: Vec<usize> = (0..30).map(|i| usize::from((i * 7) % 5 < 2)).collect();
        let x = MatrixView::new(&v, 2).unwrap();
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: None,
            features_per_split: Some(2),
            bootstrap: false,
            seed: 4,
        };
        let f = train_forest(x, &y, 2, &cfg).unwrap();
        let rows: Vec<usize> = (0..30).collect();
        let binned = BinnedMatrix::fit(x, &rows);
        let w = vec![1.0; 30];
        let crit = Criterion::Gini {
            y: &y,
            weight: &w,
            n_classes: 2,
        };
        let mut r: Vec<u32> = (0..30).collect();
        let params = TreeParams {
            max_depth: usize::MAX,
            features_per_split: None,
        };
        let tree = grow_tree(&binned, &mut r, &crit, &params, None);
        let probs = f.predict_proba(x).unwrap();
        for i in 0..30 {
            assert_eq!(probs[i], tree.leaf(x.row(i)).to_vec());
        }
    }

    #[test]
    fn tree_order_does_not_matter() {
        let v: Vec<f64> = (0..200).map(|i| ((i * 31) % 23) as f64 / 7.0).collect();
        let y: Vec<usize> = (0..100).map(|i| usize::from((i * 13) % 7 < 3)).collect();
        let x = MatrixView::new(&v, 2).unwrap();
        let mut f = train_forest(x, &y, 2, &ForestConfig { n_trees: 20, ..Default::default() }).unwrap();
        let a = f.predict_proba(x).unwrap();
        f.trees.reverse();
        let b = f.predict_proba(x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p[1] - q[1]).abs() < 1e-12);
        }
    }
}
