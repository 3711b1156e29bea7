use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DistanceMatrix, MatrixView};
use crate::domain::{ClusterAssignment, Method, Metric};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Ward,
    Average,
    Complete,
}

impl Linkage {
    /// Ward for euclidean, average for cosine.
    pub fn default_for(metric: Metric) -> Self {
        match metric {
            Metric::Euclidean => Linkage::Ward,
            Metric::Cosine => Linkage::Average,
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Ward => "ward",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
        })
    }
}

/// One agglomeration step. Leaves are nodes `0..n`, merge `t` creates node `n + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub node_a: usize,
    pub node_b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub linkage: Linkage,
    /// Sorted by non-decreasing height.
    pub merges: Vec<Merge>,
    /// Merges whose height fell below a child's height before sorting.
    pub monotonicity_violations: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        lo
    }
}

impl Dendrogram {
    /// Cluster labels after applying the first `n − k` merges.
    ///
    /// Labels are numbered in order of first appearance by row.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.n {
            return Err(Error::invalid(format!("cannot cut {} leaves into {k} clusters", self.n)));
        }
        let mut uf = UnionFind::new(2 * self.n);
        for (t, m) in self.merges.iter().take(self.n - k).enumerate() {
            let node = self.n + t;
            let r = uf.union(m.node_a, m.node_b);
            uf.parent[r] = node;
            uf.parent[node] = node;
        }
        let mut label_of_root = vec![usize::MAX; 2 * self.n];
        let mut next = 0;
        Ok((0..self.n)
            .map(|i| {
                let r = uf.find(i);
                if label_of_root[r] == usize::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect())
    }

    /// Height of the last merge applied when cutting at `k`; 0 for `k = n`.
    pub fn cut_height(&self, k: usize) -> f64 {
        if k >= self.n {
            0.0
        } else {
            self.merges[self.n - k - 1].height
        }
    }

    pub fn assignment(&self, k: usize, metric: Metric) -> Result<ClusterAssignment> {
        Ok(ClusterAssignment {
            labels: self.cut(k)?,
            k,
            method: Method::Hierarchical,
            metric,
            objective: self.cut_height(k),
        })
    }
}

/// Agglomerative clustering cut at `k` clusters.
///
/// `linkage` defaults to ward for euclidean and average for cosine.
pub fn hierarchical(
    x: MatrixView<'_>,
    k: usize,
    metric: Metric,
    linkage: Option<Linkage>,
) -> Result<(Dendrogram, ClusterAssignment)> {
    let n = x.n_rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("hierarchical needs 1 <= k <= n, got k={k}, n={n}")));
    }
    let linkage = linkage.unwrap_or(Linkage::default_for(metric));
    check_linkage(metric, linkage)?;
    let dend = hierarchical_from_distances(DistanceMatrix::compute(x, metric), linkage)?;
    let a = dend.assignment(k, metric)?;
    Ok((dend, a))
}

fn check_linkage(metric: Metric, linkage: Linkage) -> Result<()> {
    if metric == Metric::Cosine && linkage == Linkage::Ward {
        return Err(Error::invalid(
            "ward linkage requires euclidean distances, not cosine",
        ));
    }
    Ok(())
}

/// Builds the full dendrogram from a distance matrix (nearest-neighbour chain
/// with Lance–Williams updates). Ward heights are euclidean.
pub fn hierarchical_from_distances(dm: DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dm.n();
    if n == 0 {
        return Err(Error::invalid("cannot cluster an empty matrix"));
    }
    let mut d = dm.into_condensed();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("distance matrix contains non-finite values"));
    }
    if linkage == Linkage::Ward {
        for v in &mut d {
            *v *= *v;
        }
    }
    let idx = |i: usize, j: usize| DistanceMatrix::index(n, i, j);
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut chain: Vec<usize> = Vec::new();
    // (slot_a, slot_b, height, size) in creation order
    let mut raw: Vec<(usize, usize, f64, usize)> = Vec::with_capacity(n.saturating_sub(1));
    while active.len() > 1 {
        if chain.is_empty() {
            chain.push(active[0]);
        }
        let (a, b) = loop {
            let x = *chain.last().unwrap();
            let prev = (chain.len() > 1).then(|| chain[chain.len() - 2]);
            let mut best = prev.map(|p| (p, d[idx(x, p)]));
            for &i in &active {
                if i == x {
                    continue;
                }
                let di = d[idx(x, i)];
                match best {
                    Some((_, bd)) if di >= bd => {}
                    _ => best = Some((i, di)),
                }
            }
            let (y, _) = best.expect("at least two active clusters");
            if Some(y) == prev {
                chain.pop();
                chain.pop();
                break (x, y);
            }
            chain.push(y);
        };
        let dab = d[idx(a, b)];
        let (keep, drop) = if a < b { (a, b) } else { (b, a) };
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for &i in &active {
            if i == a || i == b {
                continue;
            }
            let (dai, dbi) = (d[idx(a, i)], d[idx(b, i)]);
            let nk = size[i] as f64;
            d[idx(keep, i)] = match linkage {
                Linkage::Complete => dai.max(dbi),
                Linkage::Average => (na * dai + nb * dbi) / (na + nb),
                Linkage::Ward => ((na + nk) * dai + (nb + nk) * dbi - nk * dab) / (na + nb + nk),
            };
        }
        size[keep] += size[drop];
        active.retain(|&i| i != drop);
        let height = if linkage == Linkage::Ward {
            dab.max(0.0).sqrt()
        } else {
            dab
        };
        raw.push((keep, drop, height, size[keep]));
    }

    let violations = count_violations(n, &raw);
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&p, &q| raw[p].2.total_cmp(&raw[q].2));
    let mut uf = UnionFind::new(n);
    let mut node_of: Vec<usize> = (0..n).collect();
    let merges = order
        .iter()
        .enumerate()
        .map(|(t, &r)| {
            let (sa, sb, height, sz) = raw[r];
            let (ra, rb) = (uf.find(sa), uf.find(sb));
            let (na, nb) = (node_of[ra], node_of[rb]);
            let root = uf.union(ra, rb);
            node_of[root] = n + t;
            Merge {
                node_a: na.min(nb),
                node_b: na.max(nb),
                height,
                size: sz,
            }
        })
        .collect();
    Ok(Dendrogram {
        n,
        linkage,
        merges,
        monotonicity_violations: violations,
    })
}

fn count_violations(n: usize, raw: &[(usize, usize, f64, usize)]) -> usize {
    // height of the last merge that produced the cluster held in each slot
    let mut last = vec![f64::NEG_INFINITY; n];
    let mut violations = 0;
    for &(a, b, h, _) in raw {
        if h < last[a].max(last[b]) {
            violations += 1;
        }
        last[a.min(b)] = h;
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng;
    use rand::Rng;

    fn view(v: &[f64], d: usize) -> MatrixView<'_> {
        MatrixView::new(v, d).unwrap()
    }

    #[test]
    fn average_linkage_hand_trace() {
        let v = [0.0, 1.0, 10.0, 11.0];
        let (dend, a) = hierarchical(view(&v, 1), 2, Metric::Euclidean, Some(Linkage::Average)).unwrap();
        assert_eq!(a.labels, vec![0, 0, 1, 1]);
        let h: Vec<f64> = dend.merges.iter().map(|m| m.height).collect();
        // {0,1} and {10,11} at 1, then the two pairs at mean distance 10
        assert_eq!(h, vec![1.0, 1.0, 10.0]);
        assert_eq!(dend.merges[2].size, 4);
        assert_eq!((dend.merges[2].node_a, dend.merges[2].node_b), (4, 5));
    }

    #[test]
    fn ward_heights_match_scipy_convention() {
        // ward height: sqrt(2 n1 n2 / (n1 + n2)) times the centroid distance
        let v = [0.0, 1.0, 10.0, 11.0];
        let (dend, _) = hierarchical(view(&v, 1), 1, Metric::Euclidean, None).unwrap();
        let top = dend.merges[2].height;
        let expect = (2.0f64 * 2.0 * 2.0 / 4.0 * 100.0).sqrt();
        assert!((top - expect).abs() < 1e-12, "{top} vs {expect}");
    }

    #[test]
    fn k_equals_n_is_identity() {
        let v = [3.0, 1.0, 4.0, 1.5, 9.0];
        let (_, a) = hierarchical(view(&v, 1), 5, Metric::Euclidean, None).unwrap();
        assert_eq!(a.labels, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn identical_points_merge_at_zero() {
        let v = [2.0; 12];
        let (dend, a) = hierarchical(view(&v, 3), 1, Metric::Euclidean, None).unwrap();
        assert!(dend.merges.iter().all(|m| m.height == 0.0));
        assert_eq!(a.labels, vec![0; 4]);
    }

    #[test]
    fn ward_with_cosine_is_rejected() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!(hierarchical(view(&v, 2), 1, Metric::Cosine, Some(Linkage::Ward)).is_err());
    }

    #[test]
    fn cuts_are_nested_and_monotone() {
        let mut r = rng(5);
        let v: Vec<f64> = (0..120).map(|_| r.random::<f64>()).collect();
        for linkage in [Linkage::Ward, Linkage::Average, Linkage::Complete] {
            let (dend, _) = hierarchical(view(&v, 3), 1, Metric::Euclidean, Some(linkage)).unwrap();
            assert_eq!(dend.monotonicity_violations, 0);
            assert!(dend.merges.windows(2).all(|w| w[0].height <= w[1].height));
            assert_eq!(dend.cut(1).unwrap(), vec![0; 40]);
            for k in 2..40 {
                let fine = dend.cut(k).unwrap();
                let coarse = dend.cut(k - 1).unwrap();
                assert_eq!(*fine.iter().max().unwrap() + 1, k);
                // every fine cluster sits inside one coarse cluster
                for i in 0..40 {
                    for j in 0..40 {
                        if fine[i] == fine[j] {
                            assert_eq!(coarse[i], coarse[j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn matches_naive_agglomeration() {
        let mut r = rng(11);
        let v: Vec<f64> = (0..60).map(|_| r.random::<f64>() * 10.0).collect();
        for linkage in [Linkage::Average, Linkage::Complete] {
            let (dend, _) = hierarchical(view(&v, 2), 1, Metric::Euclidean, Some(linkage)).unwrap();
            let naive = naive_heights(&v, 2, linkage);
            for (m, h) in dend.merges.iter().zip(naive) {
                assert!((m.height - h).abs() < 1e-9);
            }
        }
    }

    // O(n^3) reference: recompute cluster distances from scratch each step
    fn naive_heights(v: &[f64], d: usize, linkage: Linkage) -> Vec<f64> {
        let n = v.len() / d;
        let pt = |i: usize| &v[i * d..(i + 1) * d];
        let dist = |i: usize, j: usize| super::super::sq_euclidean(pt(i), pt(j)).sqrt();
        let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut heights = Vec::new();
        while clusters.len() > 1 {
            let mut best = (0, 0, f64::INFINITY);
            for a in 0..clusters.len() {
                for b in a + 1..clusters.len() {
                    let pairs = clusters[a]
                        .iter()
                        .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)));
                    let h = match linkage {
                        Linkage::Complete => pairs.map(|(i, j)| dist(i, j)).fold(0.0, f64::max),
                        _ => {
                            let c = (clusters[a].len() * clusters[b].len()) as f64;
                            pairs.map(|(i, j)| dist(i, j)).sum::<f64>() / c
                        }
                    };
                    if h < best.2 {
                        best = (a, b, h);
                    }
                }
            }
            let merged = clusters.remove(best.1);
            clusters[best.0].extend(merged);
            heights.push(best.2);
        }
        heights.sort_by(f64::total_cmp);
        heights
    }
}
