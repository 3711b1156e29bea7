use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hierarchical_from_distances, kmeans, DistanceMatrix, KMeansConfig, Linkage, MatrixView};
use crate::domain::{ClusterAssignment, FeatureMatrix, Method, Metric};
use crate::error::{Error, Result};
use crate::rng::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub widths: Vec<f64>,
    pub mean_width: f64,
}

/// Silhouette widths `s(i) = (b − a) / max(a, b)`.
pub fn silhouette(x: MatrixView<'_>, a: &ClusterAssignment, metric: Metric) -> Result<SilhouetteReport> {
    if a.labels.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: a.labels.len(),
        });
    }
    let dm = DistanceMatrix::compute(x, metric);
    silhouette_from_distances(&dm, &a.labels, a.k)
}

/// Silhouette on a precomputed distance matrix.
///
/// Singleton clusters score 0, as does any point with `a = b = 0`.
pub fn silhouette_from_distances(dm: &DistanceMatrix, labels: &[usize], k: usize) -> Result<SilhouetteReport> {
    let n = dm.n();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if k < 2 {
        return Err(Error::invalid("silhouette needs at least two clusters"));
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::invalid(format!("label {l} out of range for k={k}")));
        }
        sizes[l] += 1;
    }
    if sizes.contains(&0) {
        return Err(Error::invalid("silhouette needs every cluster non-empty"));
    }
    let widths: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += dm.get(i, j);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    let mean_width = widths.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteReport { widths, mean_width })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectKConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub kmeans: KMeansConfig,
    pub linkage: Option<Linkage>,
    /// Score silhouettes on a seeded row sample of this size when `n` exceeds it.
    pub silhouette_sample: Option<usize>,
}

impl Default for SelectKConfig {
    fn default() -> Self {
        SelectKConfig {
            k_min: 2,
            k_max: 10,
            kmeans: KMeansConfig::default(),
            linkage: None,
            silhouette_sample: None,
        }
    }
}

/// Mean silhouette width for every k scanned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KProfile {
    pub entries: Vec<(usize, f64)>,
}

impl KProfile {
    /// Argmax of the mean width, ties to the smaller k.
    pub fn best_k(&self) -> usize {
        let mut best = self.entries[0];
        for &(k, w) in &self.entries[1..] {
            if w > best.1 {
                best = (k, w);
            }
        }
        best.0
    }
}

/// Clusters at every k in `[k_min, k_max]` and picks the k with the widest mean silhouette.
pub fn select_k(
    x: &FeatureMatrix,
    method: Method,
    metric: Metric,
    seed: u64,
    cfg: &SelectKConfig,
) -> Result<(usize, KProfile)> {
    let n = x.n_rows();
    if cfg.k_min < 2 || cfg.k_min > cfg.k_max || cfg.k_max + 1 > n {
        return Err(Error::invalid(format!(
            "k range [{}, {}] must lie within [2, n-1] for n={n}",
            cfg.k_min, cfg.k_max
        )));
    }
    let view = MatrixView::from(x);
    let sample_rows: Option<Vec<usize>> = match cfg.silhouette_sample {
        Some(m) if m < n => {
            let mut rows = sample(&mut rng(seed ^ 0x5111), n, m).into_vec();
            rows.sort_unstable();
            Some(rows)
        }
        _ => None,
    };
    let dm = match &sample_rows {
        Some(rows) => {
            let sub = x.select_rows(rows);
            DistanceMatrix::compute(MatrixView::from(&sub), metric)
        }
        None => DistanceMatrix::compute(view, metric),
    };
    let dend = match method {
        Method::Hierarchical => {
            let linkage = cfg.linkage.unwrap_or(Linkage::default_for(metric));
            let full = DistanceMatrix::compute(view, metric);
            Some(hierarchical_from_distances(full, linkage)?)
        }
        Method::Kmeans => None,
    };
    let mut entries = Vec::with_capacity(cfg.k_max - cfg.k_min + 1);
    for k in cfg.k_min..=cfg.k_max {
        let labels = match &dend {
            Some(d) => d.cut(k)?,
            None => kmeans(view, k, metric, seed, &cfg.kmeans)?.1.labels,
        };
        let scored: Vec<usize> = match &sample_rows {
            Some(rows) => rows.iter().map(|&i| labels[i]).collect(),
            None => labels,
        };
        let (scored, k_eff) = compact_labels(scored);
        let width = if k_eff < 2 {
            0.0
        } else {
            silhouette_from_distances(&dm, &scored, k_eff)?.mean_width
        };
        entries.push((k, width));
    }
    let profile = KProfile { entries };
    Ok((profile.best_k(), profile))
}

// a subsample can miss a cluster entirely; renumber what is present
fn compact_labels(labels: Vec<usize>) -> (Vec<usize>, usize) {
    let mut map = std::collections::BTreeMap::new();
    for &l in &labels {
        let next = map.len();
        map.entry(l).or_insert(next);
    }
    let k = map.len();
    (labels.into_iter().map(|l| map[&l]).collect(), k)
}
