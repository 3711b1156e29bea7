use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rank_test;
use crate::domain::FeatureMatrix;
use crate::error::{Error, Result};

/// Smallest p-value used before taking logs.
pub const P_FLOOR: f64 = 1e-300;

/// Which group comparisons are averaged into `avg_neglog10_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Each subgroup against all other cases.
    #[default]
    OneVsRest,
    /// Every unordered pair of subgroups.
    Pairwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityRow {
    pub feature: String,
    pub subgroup_means: Vec<f64>,
    pub std_of_means: f64,
    pub avg_neglog10_p: f64,
    pub highlighted: bool,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Flags rows strictly above the median of both measures.
pub fn highlight_both_medians(rows: &mut [HeterogeneityRow]) {
    let s: Vec<f64> = rows.iter().map(|r| r.std_of_means).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.avg_neglog10_p).collect();
    let (ms, mp) = (median(&s), median(&p));
    for r in rows {
        r.highlighted = r.std_of_means > ms && r.avg_neglog10_p > mp;
    }
}

/// Per-feature spread of subgroup means and mean `−log10 p` over the chosen comparisons.
pub fn heterogeneity_summary(
    x: &FeatureMatrix,
    labels: &[usize],
    k: usize,
    comparison: Comparison,
) -> Result<Vec<HeterogeneityRow>> {
    if k < 2 {
        return Err(Error::invalid("heterogeneity needs at least two subgroups"));
    }
    if labels.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: labels.len(),
        });
    }
    if labels.iter().any(|&l| l >= k) {
        return Err(Error::invalid(format!("label out of range for k={k}")));
    }
    let mut rows: Vec<HeterogeneityRow> = (0..x.n_cols())
        .into_par_iter()
        .map(|j| {
            let col = x.column(j);
            let mut groups: Vec<Vec<f64>> = vec![Vec::new(); k];
            for (v, &l) in col.iter().zip(labels) {
                groups[l].push(*v);
            }
            let means: Vec<f64> = groups
                .iter()
                .map(|g| {
                    if g.is_empty() {
                        f64::NAN
                    } else {
                        g.iter().sum::<f64>() / g.len() as f64
                    }
                })
                .collect();
            let present: Vec<f64> = means.iter().copied().filter(|m| !m.is_nan()).collect();
            let mu = present.iter().sum::<f64>() / present.len() as f64;
            let std = (present.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / present.len() as f64).sqrt();
            let mut logs = Vec::with_capacity(k * k);
            match comparison {
                Comparison::OneVsRest => {
                    for (c, g) in groups.iter().enumerate() {
                        let rest: Vec<f64> =
                            col.iter().zip(labels).filter(|(_, &l)| l != c).map(|(v, _)| *v).collect();
                        if g.is_empty() || rest.is_empty() {
                            continue;
                        }
                        logs.push(-rank_test(g, &rest)?.max(P_FLOOR).log10());
                    }
                }
                Comparison::Pairwise => {
                    for a in 0..k {
                        for b in a + 1..k {
                            if groups[a].is_empty() || groups[b].is_empty() {
                                continue;
                            }
                            logs.push(-rank_test(&groups[a], &groups[b])?.max(P_FLOOR).log10());
                        }
                    }
                }
            }
            Ok(HeterogeneityRow {
                feature: x.column_ids[j].clone(),
                subgroup_means: means,
                std_of_means: std,
                avg_neglog10_p: logs.iter().sum::<f64>() / logs.len().max(1) as f64,
                highlighted: false,
            })
        })
        .collect::<Result<_>>()?;
    highlight_both_medians(&mut rows);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng;
    use rand_distr::{Distribution, Normal};

    fn row(s: f64, p: f64) -> HeterogeneityRow {
        HeterogeneityRow {
            feature: String::new(),
            subgroup_means: vec![],
            std_of_means: s,
            avg_neglog10_p: p,
            highlighted: false,
        }
    }

    #[test]
    fn median_rule_by_hand() {
        // medians: std (0.2 + 0.3) / 2 = 0.25, p (2 + 3) / 2 = 2.5
        let mut rows = vec![row(0.1, 5.0), row(0.3, 3.0), row(0.2, 2.0), row(0.9, 1.0)];
        highlight_both_medians(&mut rows);
        let flags: Vec<bool> = rows.iter().map(|r| r.highlighted).collect();
        assert_eq!(flags, vec![false, true, false, false]);
    }

    #[test]
    fn planted_shift_is_highlighted_and_flat_feature_is_not() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut r = rng(8);
        let n = 400;
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let d = 6;
        let mut v = Vec::new();
        for &l in &labels {
            for j in 0..d {
                v.push(match j {
                    0 => 1.0,
                    1 if l == 2 => normal.sample(&mut r) + 3.0,
                    _ => normal.sample(&mut r),
                });
            }
        }
        let x = FeatureMatrix::new(
            (0..n).map(|i| i.to_string()).collect(),
            (0..d).map(|j| format!("f{j}")).collect(),
            v,
        )
        .unwrap();
        let rows = heterogeneity_summary(&x, &labels, 4, Comparison::OneVsRest).unwrap();
        assert_eq!(rows[0].std_of_means, 0.0);
        assert!(!rows[0].highlighted);
        assert!(rows[1].highlighted);
        let s: Vec<f64> = rows.iter().map(|r| r.std_of_means).collect();
        let p: Vec<f64> = rows.iter().map(|r| r.avg_neglog10_p).collect();
        for r in &rows {
            assert_eq!(r.highlighted, r.std_of_means > median(&s) && r.avg_neglog10_p > median(&p));
        }
    }

    #[test]
    fn pairwise_averages_every_pair() {
        let v = [1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 20.0, 21.0, 22.0];
        let x = FeatureMatrix::new((0..9).map(|i| i.to_string()).collect(), vec!["f".into()], v.to_vec()).unwrap();
        let labels = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        let rows = heterogeneity_summary(&x, &labels, 3, Comparison::Pairwise).unwrap();
        // each pair of fully separated triples has exact two-sided p = 2/20
        assert!((rows[0].avg_neglog10_p - -(0.1f64).log10()).abs() < 1e-12);
        let one = heterogeneity_summary(&x, &labels, 3, Comparison::OneVsRest).unwrap();
        assert_ne!(one[0].avg_neglog10_p, rows[0].avg_neglog10_p);
    }
}
