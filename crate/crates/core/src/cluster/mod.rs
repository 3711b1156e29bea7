//! k-means and agglomerative clustering, silhouette scoring and k selection.

mod hierarchical;
mod kmeans;
mod silhouette;

pub use hierarchical::{hierarchical, hierarchical_from_distances, Dendrogram, Linkage, Merge};
pub use kmeans::{kmeans, KMeansConfig, KMeansModel};
pub use silhouette::{
    select_k, silhouette, silhouette_from_distances, KProfile, SelectKConfig, SilhouetteReport,
};

use rayon::prelude::*;

pub use crate::domain::MatrixView;
use crate::domain::Metric;
use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn cosine_from_parts(ab: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        1.0
    } else {
        (1.0 - ab / (na * nb)).clamp(0.0, 2.0)
    }
}

/// Euclidean distance or cosine distance `1 − cos(a, b)`.
///
/// Cosine distance involving a zero vector is 1.
pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(match metric {
        Metric::Euclidean => sq_euclidean(a, b).sqrt(),
        Metric::Cosine => cosine_from_parts(dot(a, b), dot(a, a).sqrt(), dot(b, b).sqrt()),
    })
}

/// Condensed upper-triangular pairwise distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn compute(x: MatrixView<'_>, metric: Metric) -> Self {
        let n = x.n_rows();
        let mut data = vec![0.0; n * n.saturating_sub(1) / 2];
        let norms: Vec<f64> = match metric {
            Metric::Euclidean => Vec::new(),
            Metric::Cosine => (0..n).map(|i| dot(x.row(i), x.row(i)).sqrt()).collect(),
        };
        let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n);
        let mut rest = data.as_mut_slice();
        for i in 0..n {
            let (head, tail) = rest.split_at_mut(n - i - 1);
            rows.push((i, head));
            rest = tail;
        }
        rows.into_par_iter().for_each(|(i, out)| {
            let a = x.row(i);
            for (o, j) in out.iter_mut().zip(i + 1..n) {
                let b = x.row(j);
                *o = match metric {
                    Metric::Euclidean => sq_euclidean(a, b).sqrt(),
                    Metric::Cosine => cosine_from_parts(dot(a, b), norms[i], norms[j]),
                };
            }
        });
        DistanceMatrix { n, data }
    }

    /// Builds a matrix from condensed values (row-major upper triangle).
    pub fn from_condensed(n: usize, data: Vec<f64>) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn condensed(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn into_condensed(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub(crate) fn index(n: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        n * i - i * (i + 1) / 2 + j - i - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.data[Self::index(self.n, i, j)]
        }
    }
}
