use serde::{Deserialize, Serialize};

use crate::domain::ClusterAssignment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// `confusion[i][j]` counts rows with label `i` in `a` and aligned label `j` in `b`.
    pub confusion: Vec<Vec<u64>>,
    /// `alignment[j]` is the label given to `b`'s original label `j`.
    pub alignment: Vec<usize>,
    pub kappa: f64,
    pub row_percent: Vec<Vec<f64>>,
}

/// `k × k` contingency counts of two label vectors.
pub fn confusion(a: &[usize], b: &[usize], k: usize) -> Result<Vec<Vec<u64>>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let mut c = vec![vec![0u64; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        if x >= k || y >= k {
            return Err(Error::invalid(format!("label out of range for k={k}")));
        }
        c[x][y] += 1;
    }
    Ok(c)
}

/// Minimum-cost assignment; returns `col_of_row`.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[p[j] - 1] = j - 1;
    }
    col_of_row
}

fn best_total(weights: &[Vec<i64>], rows: &[usize], cols: &[usize]) -> i64 {
    let cost: Vec<Vec<i64>> = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| -weights[r][c]).collect())
        .collect();
    let assign = hungarian(&cost);
    rows.iter()
        .enumerate()
        .map(|(i, &r)| weights[r][cols[assign[i]]])
        .sum()
}

/// Relabeling of `b` that maximizes diagonal agreement with `a`.
///
/// Among optimal relabelings the lexicographically smallest is returned;
/// `perm[j]` is the new label for `b`'s label `j`.
pub fn align_labels(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<Vec<usize>> {
    if a.k != b.k {
        return Err(Error::invalid(format!("cannot align k={} with k={}", a.k, b.k)));
    }
    let k = a.k;
    let c = confusion(&a.labels, &b.labels, k)?;
    // weights[j][i]: rows agreeing if b-label j becomes i
    let w: Vec<Vec<i64>> = (0..k).map(|j| (0..k).map(|i| c[i][j] as i64).collect()).collect();
    let all: Vec<usize> = (0..k).collect();
    let optimum = best_total(&w, &all, &all);
    let mut perm = Vec::with_capacity(k);
    let mut fixed = 0i64;
    let mut free: Vec<usize> = all.clone();
    for j in 0..k {
        let rest_rows: Vec<usize> = (j + 1..k).collect();
        let choice = free
            .iter()
            .copied()
            .find(|&i| {
                let cols: Vec<usize> = free.iter().copied().filter(|&f| f != i).collect();
                fixed + w[j][i] + best_total(&w, &rest_rows, &cols) == optimum
            })
            .expect("some extension of an optimal prefix is optimal");
        fixed += w[j][choice];
        perm.push(choice);
        free.retain(|&f| f != choice);
    }
    Ok(perm)
}

/// Multi-class Cohen's kappa `(p_o − p_e) / (1 − p_e)`.
///
/// When `p_e = 1` kappa is 1 if the labels agree everywhere, else 0.
pub fn cohen_kappa(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::invalid("kappa of empty label vectors"));
    }
    let k = a.iter().chain(b).max().unwrap() + 1;
    let c = confusion(a, b, k)?;
    let n = a.len() as f64;
    let po = (0..k).map(|i| c[i][i]).sum::<u64>() as f64 / n;
    let pe: f64 = (0..k)
        .map(|i| {
            let row: u64 = c[i].iter().sum();
            let col: u64 = c.iter().map(|r| r[i]).sum();
            (row as f64 / n) * (col as f64 / n)
        })
        .sum();
    if pe >= 1.0 {
        return Ok(if po >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok((po - pe) / (1.0 - pe))
}

/// Row-normalized confusion: entry `(i, j)` is the fraction of `a`-cluster `i` labeled `j` in `b`.
pub fn agreement_matrix(a: &[usize], b: &[usize], k: usize) -> Result<Vec<Vec<f64>>> {
    let c = confusion(a, b, k)?;
    Ok(c.iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&v| if total == 0 { 0.0 } else { v as f64 / total as f64 })
                .collect()
        })
        .collect())
}

/// Aligns `b` to `a`, then reports kappa and agreement. Returns the aligned `b`.
pub fn agreement(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<(AgreementReport, ClusterAssignment)> {
    let perm = align_labels(a, b)?;
    let mut aligned = b.clone();
    for l in &mut aligned.labels {
        *l = perm[*l];
    }
    let report = AgreementReport {
        confusion: confusion(&a.labels, &aligned.labels, a.k)?,
        kappa: cohen_kappa(&a.labels, &aligned.labels)?,
        row_percent: agreement_matrix(&a.labels, &aligned.labels, a.k)?,
        alignment: perm,
    };
    Ok((report, aligned))
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index between two partitions.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::invalid("ARI of empty label vectors"));
    }
    let k = a.iter().chain(b).max().unwrap() + 1;
    let c = confusion(a, b, k)?;
    let index: f64 = c.iter().flatten().map(|&v| comb2(v)).sum();
    let rows: f64 = c.iter().map(|r| comb2(r.iter().sum())).sum();
    let cols: f64 = (0..k).map(|j| comb2(c.iter().map(|r| r[j]).sum())).sum();
    let expected = rows * cols / comb2(a.len() as u64);
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Method, Metric};
    use crate::rng::rng;
    use rand::Rng;

    fn asg(labels: Vec<usize>, k: usize) -> ClusterAssignment {
        ClusterAssignment {
            labels,
            k,
            method: Method::Kmeans,
            metric: Metric::Euclidean,
            objective: 0.0,
        }
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out.sort();
        out
    }

    fn brute_force(a: &[usize], b: &[usize], k: usize) -> Vec<usize> {
        let score = |p: &Vec<usize>| a.iter().zip(b).filter(|(x, y)| p[**y] == **x).count();
        let perms = permutations(k);
        let best = perms.iter().map(score).max().unwrap();
        perms.into_iter().find(|p| score(p) == best).unwrap()
    }

    #[test]
    fn identity_and_swap() {
        let a = asg(vec![0, 0, 1, 1, 2], 3);
        assert_eq!(align_labels(&a, &a).unwrap(), vec![0, 1, 2]);
        let b = asg(vec![1, 1, 0, 0, 2], 3);
        assert_eq!(align_labels(&a, &b).unwrap(), vec![1, 0, 2]);
        let (rep, aligned) = agreement(&a, &b).unwrap();
        assert_eq!(aligned.labels, a.labels);
        assert_eq!(rep.kappa, 1.0);
    }

    #[test]
    fn differing_k_is_error() {
        assert!(align_labels(&asg(vec![0, 1], 2), &asg(vec![0, 1], 3)).is_err());
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut r = rng(17);
        for k in 1..=6 {
            for _ in 0..40 {
                let n = r.random_range(1..30);
                let a: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
                let b: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
                let got = align_labels(&asg(a.clone(), k), &asg(b.clone(), k)).unwrap();
                assert_eq!(got, brute_force(&a, &b, k));
            }
        }
    }

    #[test]
    fn kappa_hand_value() {
        assert_eq!(cohen_kappa(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.5);
        assert_eq!(cohen_kappa(&[2, 0, 1], &[2, 0, 1]).unwrap(), 1.0);
        assert_eq!(cohen_kappa(&[0, 0], &[0, 0]).unwrap(), 1.0);
        assert!(cohen_kappa(&[], &[]).is_err());
    }

    #[test]
    fn kappa_of_independent_labels_is_small() {
        let mut r = rng(23);
        let a: Vec<usize> = (0..10000).map(|_| r.random_range(0..2)).collect();
        let b: Vec<usize> = (0..10000).map(|_| r.random_range(0..2)).collect();
        assert!(cohen_kappa(&a, &b).unwrap().abs() <= 0.05);
    }

    #[test]
    fn kappa_is_symmetric() {
        let mut r = rng(29);
        for _ in 0..20 {
            let a: Vec<usize> = (0..50).map(|_| r.random_range(0..4)).collect();
            let b: Vec<usize> = (0..50).map(|_| r.random_range(0..4)).collect();
            let ab = cohen_kappa(&a, &b).unwrap();
            let ba = cohen_kappa(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-15);
        }
    }

    #[test]
    fn agreement_rows() {
        let m = agreement_matrix(&[0, 0, 0, 0, 1], &[0, 0, 0, 1, 1], 2).unwrap();
        assert_eq!(m, vec![vec![0.75, 0.25], vec![0.0, 1.0]]);
        let id = agreement_matrix(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(id, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let mut r = rng(31);
        let a: Vec<usize> = (0..100).map(|_| r.random_range(0..5)).collect();
        let b: Vec<usize> = (0..100).map(|_| r.random_range(0..5)).collect();
        for row in agreement_matrix(&a, &b, 5).unwrap() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ari_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        // pair counts: index 1, expected 1/3, max 3/2
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 2]).unwrap();
        assert!((v - 4.0 / 7.0).abs() < 1e-12);
    }
}
