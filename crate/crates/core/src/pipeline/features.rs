//! Cohort to feature matrices: aggregation, ratios, imputation and scaling.

use rayon::prelude::*;

use crate::domain::{feature_catalog, AdmissionRecord, FeatureMatrix, Gender, N_PHYSIO, N_PREDICTORS};
use crate::error::Result;
use crate::ingest::Cohort;
use crate::preprocess::{aggregate_admission, apply_scaler, derive_ratios, impute, imputation_means, standardize, ScalerState};

/// Raw demographic predictors in catalog order.
pub fn demographic_values(a: &AdmissionRecord) -> [f64; 5] {
    [
        a.age,
        if a.gender == Gender::F { 1.0 } else { 0.0 },
        if a.ventilation { 1.0 } else { 0.0 },
        a.total_admission_count as f64,
        a.admission_rank_order as f64,
    ]
}

/// Feature matrices for the case and non-case cohorts.
#[derive(Debug, Clone)]
pub struct PreparedFeatures {
    pub cases: Vec<AdmissionRecord>,
    pub noncases: Vec<AdmissionRecord>,
    /// Imputed, unstandardized 62-column matrices.
    pub case_raw: FeatureMatrix,
    pub noncase_raw: FeatureMatrix,
    /// Standardized with the case-cohort scaler.
    pub case_z: FeatureMatrix,
    pub noncase_z: FeatureMatrix,
    pub scaler: ScalerState,
    pub imputed_cells: usize,
    pub zero_denominators: usize,
}

impl PreparedFeatures {
    /// The 57 physiological columns of the standardized case matrix.
    pub fn case_physio_z(&self) -> FeatureMatrix {
        leading_columns(&self.case_z, N_PHYSIO)
    }

    pub fn noncase_physio_z(&self) -> FeatureMatrix {
        leading_columns(&self.noncase_z, N_PHYSIO)
    }
}

/// Keeps the first `d` columns.
pub fn leading_columns(m: &FeatureMatrix, d: usize) -> FeatureMatrix {
    let w = m.n_cols();
    let mut values = Vec::with_capacity(m.n_rows() * d);
    let mut mask = Vec::with_capacity(m.n_rows() * d);
    for i in 0..m.n_rows() {
        values.extend_from_slice(&m.values[i * w..i * w + d]);
        mask.extend_from_slice(&m.missing_mask[i * w..i * w + d]);
    }
    FeatureMatrix {
        row_ids: m.row_ids.clone(),
        column_ids: m.column_ids[..d].to_vec(),
        values,
        missing_mask: mask,
        scaler: m.scaler.as_ref().map(|s| ScalerState {
            column_ids: s.column_ids[..d].to_vec(),
            mean: s.mean[..d].to_vec(),
            std: s.std[..d].to_vec(),
        }),
    }
}

fn raw_matrix(cohort: &Cohort, records: &[AdmissionRecord]) -> Result<(FeatureMatrix, usize)> {
    let rows: Vec<(Vec<f64>, usize)> = records
        .par_iter()
        .map(|a| {
            let ms = cohort.measurements.get(&a.admission_id).map_or(&[][..], Vec::as_slice);
            let ext = derive_ratios(&aggregate_admission(ms));
            let mut row = ext.values;
            row.extend(demographic_values(a));
            (row, ext.zero_denominators)
        })
        .collect();
    let zero = rows.iter().map(|r| r.1).sum();
    let mut values = Vec::with_capacity(records.len() * N_PREDICTORS);
    for (r, _) in rows {
        values.extend(r);
    }
    let m = FeatureMatrix::new(
        records.iter().map(|a| a.admission_id.clone()).collect(),
        feature_catalog().predictor_columns(),
        values,
    )?;
    Ok((m, zero))
}

/// Builds the feature matrices. `global_means` are the 51 base-variable
/// imputation means; ratio means pool the observed ratios of both cohorts.
pub fn prepare_features(cohort: &Cohort, global_means: &[f64]) -> Result<PreparedFeatures> {
    let (cases, noncases): (Vec<AdmissionRecord>, Vec<AdmissionRecord>) = cohort
        .admissions
        .iter()
        .cloned()
        .partition(|a| cohort.is_delirious(&a.admission_id));
    let (case_m, z1) = raw_matrix(cohort, &cases)?;
    let (non_m, z2) = raw_matrix(cohort, &noncases)?;
    let mut means = imputation_means(global_means, &[&case_m, &non_m]);
    // demographics are never missing
    means.extend([f64::NAN; 5]);
    let case_raw = impute(&case_m, &means)?;
    let noncase_raw = impute(&non_m, &means)?;
    let imputed_cells = case_raw.missing_mask.iter().chain(&noncase_raw.missing_mask).filter(|&&m| m).count();
    let (case_z, scaler) = standardize(&case_raw)?;
    let noncase_z = apply_scaler(&noncase_raw, &scaler)?;
    Ok(PreparedFeatures {
        cases,
        noncases,
        case_raw,
        noncase_raw,
        case_z,
        noncase_z,
        scaler,
        imputed_cells,
        zero_denominators: z1 + z2,
    })
}
