use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sq_euclidean, MatrixView};
use crate::domain::{ClusterAssignment, Method, Metric};
use crate::error::{Error, Result};
use crate::rng::{rng, substream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    /// `k × d`, row-major. For cosine these live in normalized space.
    pub centroids: Vec<f64>,
    pub k: usize,
    pub d: usize,
    pub metric: Metric,
    pub inertia: f64,
    pub n_iter: usize,
    pub seed: u64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

impl KMeansModel {
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.d..(c + 1) * self.d]
    }
}

fn normalized_rows(x: MatrixView<'_>) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.n_rows() * x.n_cols());
    for i in 0..x.n_rows() {
        let r = x.row(i);
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.extend(r.iter().map(|v| v / norm));
        } else {
            out.extend_from_slice(r);
        }
    }
    out
}

/// Lloyd's algorithm with k-means++ seeding, best of `cfg.restarts` by inertia.
///
/// Cosine runs euclidean k-means on L2-normalized rows.
pub fn kmeans(
    x: MatrixView<'_>,
    k: usize,
    metric: Metric,
    seed: u64,
    cfg: &KMeansConfig,
) -> Result<(KMeansModel, ClusterAssignment)> {
    let n = x.n_rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k-means needs 1 <= k <= n, got k={k}, n={n}")));
    }
    if cfg.restarts == 0 || cfg.max_iter == 0 {
        return Err(Error::invalid("k-means needs at least one restart and one iteration"));
    }
    let owned;
    let data = match metric {
        Metric::Euclidean => x,
        Metric::Cosine => {
            owned = normalized_rows(x);
            MatrixView::new(&owned, x.n_cols())?
        }
    };
    let runs: Vec<Run> = (0..cfg.restarts)
        .map(|r| lloyd(data, k, substream(seed, r as u64), cfg.max_iter))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("at least one restart");
    let model = KMeansModel {
        centroids: best.centroids,
        k,
        d: x.n_cols(),
        metric,
        inertia: best.inertia,
        n_iter: best.trace.len(),
        seed,
        inertia_trace: best.trace,
    };
    let assignment = ClusterAssignment {
        labels: best.labels,
        k,
        method: Method::Kmeans,
        metric,
        objective: model.inertia,
    };
    Ok((model, assignment))
}

struct Run {
    centroids: Vec<f64>,
    labels: Vec<usize>,
    inertia: f64,
    trace: Vec<f64>,
}

fn plus_plus(x: MatrixView<'_>, k: usize, seed: u64) -> Vec<f64> {
    let (n, d) = (x.n_rows(), x.n_cols());
    let mut r = rng(seed);
    let mut centroids = Vec::with_capacity(k * d);
    let first = r.random_range(0..n);
    centroids.extend_from_slice(x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_euclidean(x.row(i), x.row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = r.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            r.random_range(0..n)
        };
        let c = x.row(pick);
        centroids.extend_from_slice(c);
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(sq_euclidean(x.row(i), c));
        }
    }
    centroids
}

/// Nearest centroid; keeps `current` when it ties for the minimum.
fn nearest(p: &[f64], centroids: &[f64], d: usize, current: Option<usize>) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (c, cen) in centroids.chunks_exact(d).enumerate() {
        let dist = sq_euclidean(p, cen);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    if let Some(cur) = current {
        let dc = sq_euclidean(p, &centroids[cur * d..(cur + 1) * d]);
        if dc == best.1 {
            return (cur, dc);
        }
    }
    best
}

fn lloyd(x: MatrixView<'_>, k: usize, seed: u64, max_iter: usize) -> Run {
    let (n, d) = (x.n_rows(), x.n_cols());
    let mut centroids = plus_plus(x, k, seed);
    let mut labels: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    loop {
        let assigned: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let cur = (labels[i] != usize::MAX).then_some(labels[i]);
                nearest(x.row(i), &centroids, d, cur)
            })
            .collect();
        let changed = assigned.iter().zip(&labels).any(|((c, _), l)| c != l);
        let inertia: f64 = assigned.iter().map(|(_, dist)| dist).sum();
        trace.push(inertia);
        for (l, (c, _)) in labels.iter_mut().zip(&assigned) {
            *l = *c;
        }
        if !changed || trace.len() >= max_iter {
            return Run {
                centroids,
                labels,
                inertia,
                trace,
            };
        }
        update_centroids(x, k, &labels, &assigned, &mut centroids);
    }
}

fn update_centroids(
    x: MatrixView<'_>,
    k: usize,
    labels: &[usize],
    assigned: &[(usize, f64)],
    centroids: &mut [f64],
) {
    let d = x.n_cols();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let mut taken = vec![false; labels.len()];
    for c in 0..k {
        if counts[c] > 0 {
            for (dst, s) in centroids[c * d..(c + 1) * d].iter_mut().zip(&sums[c * d..]) {
                *dst = s / counts[c] as f64;
            }
        } else {
            // reseed at the point farthest from its own centroid
            let far = (0..labels.len())
                .filter(|&i| !taken[i])
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if assigned[b].1 >= assigned[i].1 => Some(b),
                    _ => Some(i),
                })
                .expect("k <= n leaves a point to reseed with");
            taken[far] = true;
            centroids[c * d..(c + 1) * d].copy_from_slice(x.row(far));
        }
    }
}
