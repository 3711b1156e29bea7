use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Midranks (1-based, ties averaged) of `values` in input order.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pooled(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("rank test needs both samples non-empty"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::invalid("rank test input contains NaN"));
    }
    Ok(x.iter().chain(y).copied().collect())
}

/// Two-sided Mann–Whitney p-value by full enumeration of rank splits.
pub fn rank_test_exact(x: &[f64], y: &[f64]) -> Result<f64> {
    let all = pooled(x, y)?;
    let n = all.len();
    if n > 24 {
        return Err(Error::invalid("exact enumeration limited to 24 pooled values"));
    }
    let ranks = midranks(&all);
    let n1 = x.len();
    let expect = n1 as f64 * (n as f64 + 1.0) / 2.0;
    let observed = (ranks[..n1].iter().sum::<f64>() - expect).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        total += 1;
        let r: f64 = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| ranks[b]).sum();
        if (r - expect).abs() >= observed - 1e-9 {
            hits += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

/// Two-sided Mann–Whitney p-value by the tie- and continuity-corrected normal approximation.
pub fn rank_test_normal(x: &[f64], y: &[f64]) -> Result<f64> {
    let all = pooled(x, y)?;
    let ranks = midranks(&all);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let n = n1 + n2;
    let u = ranks[..x.len()].iter().sum::<f64>() - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let mut sorted = all;
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(erfc(z / std::f64::consts::SQRT_2).min(1.0))
}

/// Two-sided Mann–Whitney rank-sum p-value.
///
/// Exact when the pooled sample has at most 12 values, normal approximation
/// otherwise. Returns 1 when every value is identical.
pub fn rank_test(x: &[f64], y: &[f64]) -> Result<f64> {
    let all = pooled(x, y)?;
    if all.iter().all(|&v| v == all[0]) {
        return Ok(1.0);
    }
    if all.len() <= 12 {
        rank_test_exact(x, y)
    } else {
        rank_test_normal(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on an `r × c` count table.
pub fn chi_square(table: &[Vec<f64>]) -> Result<ChiSquare> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(Error::invalid("chi-square needs a rectangular table of at least 2x2"));
    }
    if table.iter().flatten().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("chi-square counts must be finite and non-negative"));
    }
    let rows: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let cols: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    if rows.iter().chain(&cols).any(|&m| m == 0.0) {
        return Err(Error::invalid("chi-square table has a zero marginal"));
    }
    let total: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = rows[i] * cols[j] / total;
            stat += (table[i][j] - e).powi(2) / e;
        }
    }
    let df = (r - 1) * (c - 1);
    let p_value = if stat <= 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, stat / 2.0)
    };
    Ok(ChiSquare {
        statistic: stat,
        df,
        p_value,
    })
}
