use serde::{Deserialize, Serialize};

use crate::domain::MatrixView;

pub const MAX_BINS: usize = 256;

/// Features quantized into at most 256 bins per column.
///
/// Thresholds are midpoints between adjacent observed values; a value's bin
/// is the number of thresholds at or below it, so `bin ≤ t ⇔ x < threshold[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedMatrix {
    pub n: usize,
    pub d: usize,
    /// Column-major bin indices.
    bins: Vec<u8>,
    pub thresholds: Vec<Vec<f64>>,
}

fn column_thresholds(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mut uniques: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match uniques.last_mut() {
            Some((u, c)) if *u == v => *c += 1,
            _ => uniques.push((v, 1)),
        }
    }
    let mid = |i: usize| (uniques[i].0 + uniques[i + 1].0) / 2.0;
    if uniques.len() <= max_bins {
        return (0..uniques.len().saturating_sub(1)).map(mid).collect();
    }
    let mut out = Vec::with_capacity(max_bins - 1);
    let mut acc = 0;
    for i in 0..uniques.len() - 1 {
        acc += uniques[i].1;
        if acc * max_bins >= (out.len() + 1) * n {
            out.push(mid(i));
            if out.len() == max_bins - 1 {
                break;
            }
        }
    }
    out
}

impl BinnedMatrix {
    pub fn fit(x: MatrixView<'_>, rows: &[usize]) -> Self {
        let d = x.n_cols();
        let thresholds: Vec<Vec<f64>> = (0..d)
            .map(|j| column_thresholds(rows.iter().map(|&i| x.row(i)[j]).collect(), MAX_BINS))
            .collect();
        let mut m = BinnedMatrix {
            n: 0,
            d,
            bins: Vec::new(),
            thresholds,
        };
        m.transform_into(x, rows);
        m
    }

    fn transform_into(&mut self, x: MatrixView<'_>, rows: &[usize]) {
        let n = rows.len();
        self.n = n;
        self.bins = vec![0u8; n * self.d];
        for j in 0..self.d {
            let th = &self.thresholds[j];
            for (r, &i) in rows.iter().enumerate() {
                let v = x.row(i)[j];
                self.bins[j * n + r] = th.partition_point(|&t| t <= v) as u8;
            }
        }
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.thresholds[feature].len() + 1
    }

    #[inline]
    pub fn bin(&self, row: usize, feature: usize) -> u8 {
        self.bins[feature * self.n + row]
    }

    pub fn column(&self, feature: usize) -> &[u8] {
        &self.bins[feature * self.n..(feature + 1) * self.n]
    }
}
