//! Aggregation, ratio derivation, mean imputation and z-scoring.
//!
//! Stage order is fixed: aggregate, derive ratios, impute, standardize.
//! Ratios are only ever computed from measured values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{feature_catalog, FeatureMatrix, Measurement, N_BASE, N_PHYSIO};
use crate::error::{Error, Result};

/// Denominators with magnitude at or below this are treated as zero.
pub const RATIO_DENOMINATOR_EPS: f64 = 1e-9;

/// Per-column location and scale used for z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub column_ids: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn mean_of(values: &mut [f64]) -> f64 {
    // sorted summation keeps the result independent of input order
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Summarises one admission's measurements into the 51 base variables.
///
/// A variable with any abnormal-flagged value takes the mean of its abnormal
/// values; otherwise the mean of its normal values. Unmeasured variables are `NaN`.
pub fn aggregate_admission(ms: &[Measurement]) -> Vec<f64> {
    let mut abnormal: Vec<Vec<f64>> = vec![Vec::new(); N_BASE];
    let mut normal: Vec<Vec<f64>> = vec![Vec::new(); N_BASE];
    for m in ms {
        if m.abnormal {
            abnormal[m.variable].push(m.value);
        } else {
            normal[m.variable].push(m.value);
        }
    }
    (0..N_BASE)
        .map(|v| {
            if !abnormal[v].is_empty() {
                mean_of(&mut abnormal[v])
            } else if !normal[v].is_empty() {
                mean_of(&mut normal[v])
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Result of [`derive_ratios`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedFeatures {
    /// 57 values: base variables then the six ratios.
    pub values: Vec<f64>,
    /// Ratios left missing because the denominator was (near) zero.
    pub zero_denominators: usize,
}

/// Appends the six ratio features to a 51-value base vector.
pub fn derive_ratios(base: &[f64]) -> ExtendedFeatures {
    assert_eq!(base.len(), N_BASE, "derive_ratios expects the 51 base variables");
    let mut values = base.to_vec();
    let mut zero_denominators = 0;
    for (num, den) in feature_catalog().ratio_indices() {
        let (n, d) = (base[num], base[den]);
        let r = if n.is_nan() || d.is_nan() {
            f64::NAN
        } else if d.abs() <= RATIO_DENOMINATOR_EPS {
            zero_denominators += 1;
            f64::NAN
        } else {
            n / d
        };
        values.push(r);
    }
    ExtendedFeatures {
        values,
        zero_denominators,
    }
}

/// Per-variable mean over normal (non-abnormal) measurements, falling back
/// to the catalog default for variables never measured as normal.
pub fn compute_global_normal_means<'a>(ms: impl IntoIterator<Item = &'a Measurement>) -> Vec<f64> {
    let mut acc = GlobalNormalMeans::default();
    for m in ms {
        acc.push(m);
    }
    acc.finish()
}

/// Streaming accumulator behind [`compute_global_normal_means`].
#[derive(Debug, Clone)]
pub struct GlobalNormalMeans {
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl Default for GlobalNormalMeans {
    fn default() -> Self {
        GlobalNormalMeans {
            sums: vec![0.0; N_BASE],
            counts: vec![0; N_BASE],
        }
    }
}

impl GlobalNormalMeans {
    pub fn push(&mut self, m: &Measurement) {
        if !m.abnormal {
            self.sums[m.variable] += m.value;
            self.counts[m.variable] += 1;
        }
    }

    pub fn finish(&self) -> Vec<f64> {
        let cat = feature_catalog();
        (0..N_BASE)
            .map(|v| {
                if self.counts[v] > 0 {
                    self.sums[v] / self.counts[v] as f64
                } else {
                    cat.variables[v].normal_mean
                }
            })
            .collect()
    }
}

/// Imputation means for all 57 physiological columns.
///
/// Base columns use `base_means`. Each ratio column uses the mean of its
/// observed values across `observed`, or the ratio of base means when the
/// ratio was never observed.
pub fn imputation_means(base_means: &[f64], observed: &[&FeatureMatrix]) -> Vec<f64> {
    assert_eq!(base_means.len(), N_BASE);
    let mut out = base_means.to_vec();
    for (r, (num, den)) in feature_catalog().ratio_indices().into_iter().enumerate() {
        let col = N_BASE + r;
        let (mut sum, mut n) = (0.0, 0u64);
        for m in observed {
            for i in 0..m.n_rows() {
                let v = m.get(i, col);
                if !v.is_nan() {
                    sum += v;
                    n += 1;
                }
            }
        }
        out.push(if n > 0 {
            sum / n as f64
        } else {
            base_means[num] / base_means[den]
        });
    }
    debug_assert_eq!(out.len(), N_PHYSIO);
    out
}

/// Fills every `NaN` cell with its column mean and records it in the mask.
///
/// `means[j]` may be `NaN` when column `j` has no mean source; that is only
/// an error if the column actually has missing cells.
pub fn impute(m: &FeatureMatrix, means: &[f64]) -> Result<FeatureMatrix> {
    let d = m.n_cols();
    if means.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: means.len(),
        });
    }
    let mut out = m.clone();
    for (idx, v) in out.values.iter_mut().enumerate() {
        if v.is_nan() {
            let j = idx % d;
            if !means[j].is_finite() {
                return Err(Error::invalid(format!(
                    "column `{}` has missing values but no imputation mean",
                    m.column_ids[j]
                )));
            }
            *v = means[j];
            out.missing_mask[idx] = true;
        }
    }
    Ok(out)
}

/// Z-scores every column with its population (divisor-n) standard deviation.
/// Constant columns map to zero.
pub fn standardize(m: &FeatureMatrix) -> Result<(FeatureMatrix, ScalerState)> {
    if m.has_nan() {
        return Err(Error::invalid("standardize requires a matrix without missing values"));
    }
    let (n, d) = (m.n_rows(), m.n_cols());
    let mut mean = vec![0.0; d];
    let mut std = vec![0.0; d];
    for j in 0..d {
        if n == 0 {
            continue;
        }
        let first = m.get(0, j);
        if (1..n).all(|i| m.get(i, j) == first) {
            mean[j] = first;
            continue;
        }
        let mu = (0..n).map(|i| m.get(i, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (m.get(i, j) - mu).powi(2)).sum::<f64>() / n as f64;
        mean[j] = mu;
        std[j] = var.sqrt();
    }
    let scaler = ScalerState {
        column_ids: m.column_ids.clone(),
        mean,
        std,
    };
    let z = apply_scaler(m, &scaler)?;
    Ok((z, scaler))
}

/// Applies a previously fitted scaler without refitting.
pub fn apply_scaler(m: &FeatureMatrix, s: &ScalerState) -> Result<FeatureMatrix> {
    if m.column_ids != s.column_ids {
        return Err(Error::ColumnMismatch(format!(
            "matrix has {} columns, scaler has {} (or ids differ)",
            m.n_cols(),
            s.column_ids.len()
        )));
    }
    let d = m.n_cols();
    let mut out = m.clone();
    for (idx, v) in out.values.iter_mut().enumerate() {
        let j = idx % d;
        *v = if s.std[j] > 0.0 {
            (*v - s.mean[j]) / s.std[j]
        } else {
            0.0
        };
    }
    out.scaler = Some(s.clone());
    Ok(out)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

/// Writes `row_id` plus one column per feature.
pub fn write_matrix_csv(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["row_id".to_string()];
    header.extend(m.column_ids.iter().cloned());
    w.write_record(&header)?;
    for i in 0..m.n_rows() {
        let mut rec = vec![m.row_ids[i].clone()];
        rec.extend(m.row(i).iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() }));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes the imputation mask as 0/1 cells in the matrix layout.
pub fn write_mask_csv(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["row_id".to_string()];
    header.extend(m.column_ids.iter().cloned());
    w.write_record(&header)?;
    let d = m.n_cols();
    for i in 0..m.n_rows() {
        let mut rec = vec![m.row_ids[i].clone()];
        rec.extend(
            m.missing_mask[i * d..(i + 1) * d]
                .iter()
                .map(|&b| if b { "1".to_string() } else { "0".to_string() }),
        );
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_scaler_csv(path: &Path, s: &ScalerState) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["column_id", "mean", "std"])?;
    for j in 0..s.column_ids.len() {
        w.write_record([s.column_ids[j].clone(), s.mean[j].to_string(), s.std[j].to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => Error::Csv(e),
    })?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("row_id") {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: "row_id,<features...>".into(),
            found: header.join(","),
        });
    }
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        ids.push(rec.get(0).unwrap_or_default().to_string());
        rows.push(rec.iter().skip(1).map(str::to_string).collect());
    }
    Ok((header[1..].to_vec(), ids, rows))
}

/// Reads a matrix written by [`write_matrix_csv`], with an optional mask sidecar.
pub fn read_matrix_csv(path: &Path, mask: Option<&Path>) -> Result<FeatureMatrix> {
    let (cols, ids, rows) = read_table(path)?;
    let mut values = Vec::with_capacity(ids.len() * cols.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                message: format!("expected {} values, found {}", cols.len(), row.len()),
            });
        }
        for cell in row {
            values.push(if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: i as u64 + 2,
                    message: format!("invalid number `{cell}`"),
                })?
            });
        }
    }
    let mut m = FeatureMatrix::new(ids, cols, values)?;
    if let Some(mask_path) = mask {
        let (mcols, mids, mrows) = read_table(mask_path)?;
        if mcols != m.column_ids || mids != m.row_ids {
            return Err(Error::ColumnMismatch("mask layout differs from matrix".into()));
        }
        m.missing_mask = mrows.iter().flatten().map(|c| c == "1").collect();
    }
    Ok(m)
}

pub fn read_scaler_csv(path: &Path) -> Result<ScalerState> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut s = ScalerState {
        column_ids: vec![],
        mean: vec![],
        std: vec![],
    };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k).and_then(|c| c.parse().ok()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                message: "invalid scaler row".into(),
            })
        };
        s.column_ids.push(rec.get(0).unwrap_or_default().to_string());
        s.mean.push(num(1)?);
        s.std.push(num(2)?);
    }
    Ok(s)
}
