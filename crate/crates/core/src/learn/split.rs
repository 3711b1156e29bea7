use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded train/test split of row indices; stratified splits shuffle within each class.
pub fn train_test_split(y: &[usize], ratio: f64, seed: u64, stratified: bool) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} must lie in (0, 1)")));
    }
    let mut r = rng(seed);
    let groups: Vec<Vec<usize>> = if stratified {
        let k = y.iter().max().map_or(0, |m| m + 1);
        let mut g = vec![Vec::new(); k];
        for (i, &c) in y.iter().enumerate() {
            g[c].push(i);
        }
        g.retain(|v| !v.is_empty());
        if g.len() < 2 {
            return Err(Error::invalid("stratified split needs at least two classes present"));
        }
        g
    } else {
        vec![(0..y.len()).collect()]
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut g in groups {
        g.shuffle(&mut r);
        let n_train = (g.len() as f64 * ratio).round() as usize;
        train.extend_from_slice(&g[..n_train]);
        test.extend_from_slice(&g[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
