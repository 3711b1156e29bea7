use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BinnedMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Training-time bin cut: rows with `bin ≤ bin_cut` go left.
        bin_cut: u8,
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: Vec<f64>,
    },
}

/// Binary tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Leaf reached by a raw feature row (`x < threshold` goes left).
    pub fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] < *threshold { *left } else { *right },
                Node::Leaf { value } => return value,
            }
        }
    }

    pub(crate) fn leaf_binned(&self, b: &BinnedMatrix, r: usize) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    bin_cut,
                    left,
                    right,
                    ..
                } => i = if b.bin(r, *feature) <= *bin_cut { *left } else { *right },
                Node::Leaf { value } => return value,
            }
        }
    }

    /// Adds each split's gain to its feature's entry.
    pub fn accumulate_gain(&self, out: &mut [f64]) {
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = n {
                out[*feature] += gain;
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }
}

/// How node statistics are accumulated and scored.
pub(crate) enum Criterion<'a> {
    /// Weighted Gini impurity over class labels.
    Gini {
        y: &'a [usize],
        weight: &'a [f64],
        n_classes: usize,
    },
    /// Second-order boosting objective.
    Newton {
        grad: &'a [f64],
        hess: &'a [f64],
        lambda: f64,
        min_child_weight: f64,
    },
}

impl Criterion<'_> {
    fn width(&self) -> usize {
        match self {
            Criterion::Gini { n_classes, .. } => *n_classes,
            Criterion::Newton { .. } => 3,
        }
    }

    #[inline]
    fn add(&self, s: &mut [f64], row: usize) {
        match self {
            Criterion::Gini { y, weight, .. } => s[y[row]] += weight[row],
            Criterion::Newton { grad, hess, .. } => {
                s[0] += grad[row];
                s[1] += hess[row];
                s[2] += 1.0;
            }
        }
    }

    fn splittable(&self, s: &[f64]) -> bool {
        match self {
            Criterion::Gini { .. } => s.iter().filter(|&&c| c > 0.0).count() >= 2,
            Criterion::Newton { .. } => s[2] >= 2.0,
        }
    }

    fn gain(&self, left: &[f64], right: &[f64], parent: &[f64]) -> Option<f64> {
        match self {
            Criterion::Gini { .. } => {
                let weighted = |s: &[f64]| {
                    let n: f64 = s.iter().sum();
                    if n == 0.0 {
                        0.0
                    } else {
                        n - s.iter().map(|c| c * c).sum::<f64>() / n
                    }
                };
                let (nl, nr): (f64, f64) = (left.iter().sum(), right.iter().sum());
                if nl <= 0.0 || nr <= 0.0 {
                    return None;
                }
                Some((weighted(parent) - weighted(left) - weighted(right)).max(0.0))
            }
            Criterion::Newton {
                lambda,
                min_child_weight,
                ..
            } => {
                if left[2] < 1.0 || right[2] < 1.0 {
                    return None;
                }
                if left[1] < *min_child_weight || right[1] < *min_child_weight {
                    return None;
                }
                let score = |s: &[f64]| s[0] * s[0] / (s[1] + lambda);
                let g = 0.5 * (score(left) + score(right) - score(parent));
                (g > 0.0).then_some(g)
            }
        }
    }

    fn leaf(&self, s: &[f64]) -> Vec<f64> {
        match self {
            Criterion::Gini { .. } => {
                let n: f64 = s.iter().sum();
                s.iter().map(|c| c / n).collect()
            }
            Criterion::Newton { lambda, .. } => vec![-s[0] / (s[1] + lambda)],
        }
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    /// Features examined per node; `None` means all.
    pub features_per_split: Option<usize>,
}

struct Builder<'a> {
    binned: &'a BinnedMatrix,
    crit: &'a Criterion<'a>,
    params: &'a TreeParams,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

// rows × features above which histogram building fans out across threads
const PARALLEL_WORK: usize = 1 << 16;

struct Candidate {
    gain: f64,
    feature: usize,
    cut: usize,
}

impl Builder<'_> {
    fn stats(&self, rows: &[u32]) -> Vec<f64> {
        let mut s = vec![0.0; self.crit.width()];
        for &r in rows {
            self.crit.add(&mut s, r as usize);
        }
        s
    }

    fn best_for_feature(&self, rows: &[u32], f: usize, parent: &[f64]) -> Option<Candidate> {
        let w = self.crit.width();
        let nb = self.binned.n_bins(f);
        if nb < 2 {
            return None;
        }
        let col = self.binned.column(f);
        let mut hist = vec![0.0; nb * w];
        for &r in rows {
            let b = col[r as usize] as usize;
            self.crit.add(&mut hist[b * w..(b + 1) * w], r as usize);
        }
        let mut left = vec![0.0; w];
        let mut right = vec![0.0; w];
        let mut best: Option<Candidate> = None;
        for cut in 0..nb - 1 {
            for c in 0..w {
                left[c] += hist[cut * w + c];
                right[c] = parent[c] - left[c];
            }
            if let Some(g) = self.crit.gain(&left, &right, parent) {
                if best.as_ref().is_none_or(|b| g > b.gain) {
                    best = Some(Candidate { gain: g, feature: f, cut });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [u32], depth: usize) -> usize {
        let parent = self.stats(rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.crit.leaf(&parent),
        });
        if depth >= self.params.max_depth || !self.crit.splittable(&parent) {
            return id;
        }
        let d = self.binned.d;
        let features: Vec<usize> = match (self.params.features_per_split, self.rng.as_deref_mut()) {
            (Some(m), Some(r)) if m < d => {
                let mut f = sample(r, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        };
        let this = &*self;
        let candidates: Vec<Option<Candidate>> = if rows.len() * features.len() >= PARALLEL_WORK {
            features
                .par_iter()
                .map(|&f| this.best_for_feature(rows, f, &parent))
                .collect()
        } else {
            features
                .iter()
                .map(|&f| this.best_for_feature(rows, f, &parent))
                .collect()
        };
        // candidates are in feature order, so strict > keeps the lowest feature on ties
        let mut best: Option<Candidate> = None;
        for c in candidates.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        let Some(best) = best else {
            return id;
        };
        let col = self.binned.column(best.feature);
        let cut = best.cut as u8;
        let mut left_rows: Vec<u32> = Vec::with_capacity(rows.len());
        let mut right_rows: Vec<u32> = Vec::with_capacity(rows.len());
        for &r in rows.iter() {
            if col[r as usize] <= cut {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        let nl = left_rows.len();
        rows[..nl].copy_from_slice(&left_rows);
        rows[nl..].copy_from_slice(&right_rows);
        drop((left_rows, right_rows));
        let (lr, rr) = rows.split_at_mut(nl);
        let left = self.grow(lr, depth + 1);
        let right = self.grow(rr, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: self.binned.thresholds[best.feature][best.cut],
            bin_cut: cut,
            gain: best.gain,
            left,
            right,
        };
        id
    }
}

/// Grows one tree over `rows` of the binned matrix.
pub(crate) fn grow_tree(
    binned: &BinnedMatrix,
    rows: &mut [u32],
    crit: &Criterion<'_>,
    params: &TreeParams,
    rng: Option<&mut ChaCha8Rng>,
) -> DecisionTree {
    let mut b = Builder {
        binned,
        crit,
        params,
        rng,
        nodes: Vec::new(),
    };
    b.grow(rows, 0);
    DecisionTree { nodes: b.nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MatrixView;

    #[test]
    fn gini_tree_fits_xor() {
        let v = [0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0];
        let y = [0, 1, 1, 0];
        let x = MatrixView::new(&v, 2).unwrap();
        let binned = BinnedMatrix::fit(x, &[0, 1, 2, 3]);
        let w = [1.0; 4];
        let crit = Criterion::Gini {
            y: &y,
            weight: &w,
            n_classes: 2,
        };
        let mut rows: Vec<u32> = (0..4).collect();
        let params = TreeParams {
            max_depth: 2,
            features_per_split: None,
        };
        let t = grow_tree(&binned, &mut rows, &crit, &params, None);
        for i in 0..4 {
            let p = t.leaf(x.row(i));
            assert_eq!(p[y[i]], 1.0);
        }
        assert_eq!(t.depth(), 2);
    }
}
