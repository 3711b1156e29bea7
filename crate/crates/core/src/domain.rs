//! Core data types and the fixed physiological feature catalog.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One base physiological variable of the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableId {
    pub id: String,
    pub display_name: String,
    pub unit: String,
    /// Global imputation default.
    pub normal_mean: f64,
    /// Published standard deviation, used by the synthetic generator.
    pub sd: f64,
}

/// A derived ratio feature `numerator / denominator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioId {
    pub id: String,
    pub display_name: String,
    pub numerator: String,
    pub denominator: String,
}

// (id, display name, unit, mean, sd)
const BASE_VARIABLES: [(&str, &str, &str, f64, f64); 51] = [
    ("weight", "Weight", "kg", 80.87, 23.31),
    ("heart_rate", "Heart Rate", "bpm", 88.41, 19.98),
    ("bp_systolic", "Blood Pressure, Systolic", "mmHg", 125.43, 24.77),
    ("bp_diastolic", "Blood Pressure, Diastolic", "mmHg", 69.17, 17.93),
    ("bp_mean", "Blood Pressure, Mean", "mmHg", 83.13, 20.38),
    ("temperature", "Temperature", "Celsius", 36.84, 1.31),
    ("albumin", "Blood Albumin", "g/dL", 4.08, 0.39),
    ("alkaline_phosphatase", "Alkaline Phosphatase", "IU/L", 77.01, 20.16),
    ("alt", "Alanine Transaminase (ALT)", "IU/L", 20.63, 41.99),
    ("ast", "Aspartate Aminotransferase (AST)", "IU/L", 24.35, 36.65),
    ("anion_gap", "Anion Gap", "mEq/L", 14.78, 2.62),
    ("base_excess", "Base Excess", "mEq/L", -1.07, 6.6),
    ("bicarbonate", "Bicarbonate", "mEq/L", 25.66, 2.5),
    ("bun", "Blood Urea Nitrogen (BUN)", "mg/dL", 13.77, 3.88),
    ("calcium", "Calcium", "mg/dL", 9.09, 0.89),
    ("chloride", "Chloride", "mEq/L", 102.33, 3.23),
    ("creatine_kinase", "Creatine Kinase/Phosphokinase", "IU/L", 104.46, 163.38),
    ("creatinine", "Creatinine", "mg/dL", 0.85, 0.19),
    ("fio2", "Fraction Of Inspired O₂ (FiO₂)", "%", 74.36, 26.83),
    ("glucose", "Glucose", "mg/dL", 113.44, 53.1),
    ("hematocrit", "Hematocrit", "%", 40.42, 4.29),
    ("hemoglobin", "Hemoglobin", "g/dL", 13.74, 1.35),
    ("inr", "International Normalized Ratio", "-", 1.04, 0.24),
    ("lactate", "Lactate", "mmol/L", 1.4, 0.37),
    ("ldh", "Lactate Dehydrogenase", "IU/L", 193.01, 61.26),
    ("magnesium", "Magnesium", "mg/dL", 2.01, 0.23),
    ("mch", "Mean Corpuscular Hemoglobin", "pg", 29.72, 1.4),
    ("mchc", "Mean Corpuscular Hemoglobin Concentration", "g/dL", 33.31, 1.01),
    ("mcv", "Mean Corpuscular Volume", "fL", 89.9, 4.18),
    ("basophils", "Basophils", "K/uL", 0.17, 0.24),
    ("eosinophils", "Eosinophils", "K/uL", 0.14, 0.16),
    ("lymphocytes", "Lymphocytes", "K/uL", 2.0, 0.76),
    ("monocytes", "Monocytes", "K/uL", 0.54, 0.34),
    ("neutrophils", "Neutrophils", "K/uL", 4.59, 2.66),
    ("pao2", "Partial Pressure Of O₂ (PaO₂)", "mmHg", 95.09, 9.61),
    ("paco2", "Partial Pressure Of CO₂", "mmHg", 40.07, 14.71),
    ("peep", "Positive End-Expiratory Pressure", "-", 5.88, 5.3),
    ("ph", "PH", "-", 7.4, 0.08),
    ("platelets", "Platelets", "K/uL", 250.48, 66.37),
    ("potassium", "Potassium", "mEq/L", 4.16, 0.45),
    ("pt", "Prothrombin Time", "sec", 11.72, 1.38),
    ("ptt", "Partial Prothrombin Time", "sec", 29.15, 3.85),
    ("rbc", "Red Blood Cells (RBC)", "m/uL", 4.7, 0.41),
    ("rdw", "Red Cell Distribution Width", "%", 13.63, 0.92),
    ("so2", "Saturated O₂ (SO₂)", "%", 93.93, 11.46),
    ("sodium", "Sodium", "mEq/L", 138.92, 2.93),
    ("total_bilirubin", "Total Bilirubin", "mg/dL", 0.55, 0.33),
    ("total_co2", "Total CO₂", "mEq/L", 25.35, 2.67),
    ("troponin", "Troponin", "ng/mL", 0.01, 0.5),
    ("urea_nitrogen", "Urea Nitrogen", "mg/dL", 13.54, 3.76),
    ("wbc", "White Blood Cells", "K/uL", 7.56, 1.8),
];

// (id, display name, numerator, denominator)
const RATIOS: [(&str, &str, &str, &str); 6] = [
    ("ast_alt", "AST:ALT", "ast", "alt"),
    ("bun_creatinine", "BUN:Creatinine", "bun", "creatinine"),
    ("fio2_pao2", "FiO₂:PaO₂", "fio2", "pao2"),
    ("so2_fio2", "SO₂:FiO₂", "so2", "fio2"),
    ("neutrophils_lymphocytes", "Neutrophils:Lymphocytes", "neutrophils", "lymphocytes"),
    ("platelets_rbc", "Platelets:RBC", "platelets", "rbc"),
];

/// Demographic predictor columns appended for outcome modelling.
pub const DEMOGRAPHIC_IDS: [(&str, &str); 5] = [
    ("age", "Age"),
    ("gender", "Gender (female)"),
    ("ventilation", "Ventilation"),
    ("total_admissions", "Patients' Total Admissions"),
    ("admission_rank_order", "Admission Rank Order"),
];

pub const N_BASE: usize = 51;
pub const N_RATIOS: usize = 6;
/// Physiological feature count: base variables followed by ratios.
pub const N_PHYSIO: usize = N_BASE + N_RATIOS;
pub const N_PREDICTORS: usize = N_PHYSIO + DEMOGRAPHIC_IDS.len();

/// The immutable variable + ratio catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub variables: Vec<VariableId>,
    pub ratios: Vec<RatioId>,
}

impl FeatureCatalog {
    fn build() -> Self {
        let variables = BASE_VARIABLES
            .iter()
            .map(|&(id, name, unit, mean, sd)| VariableId {
                id: id.to_string(),
                display_name: name.to_string(),
                unit: unit.to_string(),
                normal_mean: mean,
                sd,
            })
            .collect();
        let ratios = RATIOS
            .iter()
            .map(|&(id, name, num, den)| RatioId {
                id: id.to_string(),
                display_name: name.to_string(),
                numerator: num.to_string(),
                denominator: den.to_string(),
            })
            .collect();
        FeatureCatalog { variables, ratios }
    }

    /// Index of a base variable id.
    pub fn variable_index(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.id == id)
    }

    pub fn variable(&self, id: &str) -> Option<&VariableId> {
        self.variables.iter().find(|v| v.id == id)
    }

    /// Index of a physiological column (base or ratio) in the 57-column layout.
    pub fn physio_index(&self, id: &str) -> Option<usize> {
        self.variable_index(id).or_else(|| {
            self.ratios
                .iter()
                .position(|r| r.id == id)
                .map(|i| N_BASE + i)
        })
    }

    /// Numerator/denominator base indices of each ratio, in column order.
    pub fn ratio_indices(&self) -> Vec<(usize, usize)> {
        self.ratios
            .iter()
            .map(|r| {
                (
                    self.variable_index(&r.numerator).expect("ratio numerator in catalog"),
                    self.variable_index(&r.denominator).expect("ratio denominator in catalog"),
                )
            })
            .collect()
    }

    /// The 57 physiological column ids in canonical order.
    pub fn physio_columns(&self) -> Vec<String> {
        self.variables
            .iter()
            .map(|v| v.id.clone())
            .chain(self.ratios.iter().map(|r| r.id.clone()))
            .collect()
    }

    /// The 62 predictor column ids (physiological + demographic).
    pub fn predictor_columns(&self) -> Vec<String> {
        let mut cols = self.physio_columns();
        cols.extend(DEMOGRAPHIC_IDS.iter().map(|(id, _)| id.to_string()));
        cols
    }

    /// Human-readable name of any column id known to the pipeline.
    pub fn display_name<'a>(&'a self, id: &'a str) -> &'a str {
        if let Some(v) = self.variable(id) {
            return &v.display_name;
        }
        if let Some(r) = self.ratios.iter().find(|r| r.id == id) {
            return &r.display_name;
        }
        DEMOGRAPHIC_IDS
            .iter()
            .find(|(d, _)| *d == id)
            .map(|(_, name)| *name)
            .unwrap_or(id)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "display_name", "unit", "normal_mean"])?;
        for v in &self.variables {
            w.write_record([
                v.id.as_str(),
                v.display_name.as_str(),
                v.unit.as_str(),
                &v.normal_mean.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<catalog>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }
}

/// The shared catalog. Constructed once, never mutated.
pub fn feature_catalog() -> &'static FeatureCatalog {
    static CATALOG: OnceLock<FeatureCatalog> = OnceLock::new();
    CATALOG.get_or_init(FeatureCatalog::build)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

impl Gender {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "M" => Some(Gender::M),
            "F" => Some(Gender::F),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AdmissionType {
    Emer,
    Observation,
    Surgical,
    Elective,
}

impl AdmissionType {
    pub const ALL: [AdmissionType; 4] = [
        AdmissionType::Emer,
        AdmissionType::Observation,
        AdmissionType::Surgical,
        AdmissionType::Elective,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "EMER" => Some(AdmissionType::Emer),
            "OBSERVATION" => Some(AdmissionType::Observation),
            "SURGICAL" => Some(AdmissionType::Surgical),
            "ELECTIVE" => Some(AdmissionType::Elective),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AdmissionType::Emer => "EMER",
            AdmissionType::Observation => "OBSERVATION",
            AdmissionType::Surgical => "SURGICAL",
            AdmissionType::Elective => "ELECTIVE",
        }
    }
}

/// One hospital stay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionRecord {
    pub admission_id: String,
    pub patient_id: String,
    pub age: f64,
    pub gender: Gender,
    pub admit_time: DateTime<Utc>,
    pub discharge_time: DateTime<Utc>,
    pub admission_type: AdmissionType,
    pub ventilation: bool,
    pub icd_codes: BTreeSet<String>,
    pub cam_icu_positive_times: Vec<DateTime<Utc>>,
    pub haloperidol_given: bool,
    pub died_in_hospital: bool,
    pub total_admission_count: u32,
    pub admission_rank_order: u32,
}

impl AdmissionRecord {
    /// Length of stay in fractional days.
    pub fn los_days(&self) -> f64 {
        (self.discharge_time - self.admit_time).num_milliseconds() as f64 / 86_400_000.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordViolation {
    NegativeLos,
    RankExceedsTotal { rank: u32, total: u32 },
    ZeroAdmissionCount,
    ZeroRankOrder,
    NonFiniteAge,
}

impl fmt::Display for RecordViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordViolation::NegativeLos => write!(f, "negative LOS"),
            RecordViolation::RankExceedsTotal { rank, total } => {
                write!(f, "admission rank order {rank} exceeds total admission count {total}")
            }
            RecordViolation::ZeroAdmissionCount => write!(f, "total admission count must be >= 1"),
            RecordViolation::ZeroRankOrder => write!(f, "admission rank order must be >= 1"),
            RecordViolation::NonFiniteAge => write!(f, "age is not finite"),
        }
    }
}

/// Returns every invariant the record breaks; empty when well formed.
pub fn validate_record(r: &AdmissionRecord) -> Vec<RecordViolation> {
    let mut out = Vec::new();
    if r.discharge_time < r.admit_time {
        out.push(RecordViolation::NegativeLos);
    }
    if r.total_admission_count == 0 {
        out.push(RecordViolation::ZeroAdmissionCount);
    }
    if r.admission_rank_order == 0 {
        out.push(RecordViolation::ZeroRankOrder);
    }
    if r.admission_rank_order > r.total_admission_count {
        out.push(RecordViolation::RankExceedsTotal {
            rank: r.admission_rank_order,
            total: r.total_admission_count,
        });
    }
    if !r.age.is_finite() {
        out.push(RecordViolation::NonFiniteAge);
    }
    out
}

/// One lab or chart observation. `variable` indexes the catalog's base variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub admission_id: String,
    pub variable: usize,
    pub value: f64,
    pub abnormal: bool,
    pub time: DateTime<Utc>,
}

/// Dense row-major admissions × features table.
///
/// Before imputation missing cells hold `NaN`; afterwards `missing_mask`
/// marks the cells that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub column_ids: Vec<String>,
    pub values: Vec<f64>,
    pub missing_mask: Vec<bool>,
    pub scaler: Option<crate::preprocess::ScalerState>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, column_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let expected = row_ids.len() * column_ids.len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        let missing_mask = vec![false; values.len()];
        Ok(FeatureMatrix {
            row_ids,
            column_ids,
            values,
            missing_mask,
            scaler: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn column_index(&self, id: &str) -> Option<usize> {
        self.column_ids.iter().position(|c| c == id)
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let d = self.n_cols();
        let mut values = Vec::with_capacity(rows.len() * d);
        let mut mask = Vec::with_capacity(rows.len() * d);
        for &i in rows {
            values.extend_from_slice(self.row(i));
            mask.extend_from_slice(&self.missing_mask[i * d..(i + 1) * d]);
        }
        FeatureMatrix {
            row_ids: rows.iter().map(|&i| self.row_ids[i].clone()).collect(),
            column_ids: self.column_ids.clone(),
            values,
            missing_mask: mask,
            scaler: self.scaler.clone(),
        }
    }

    pub fn has_nan(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }
}

/// Borrowed row-major matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatrixView<'a> {
    values: &'a [f64],
    n: usize,
    d: usize,
}

impl<'a> MatrixView<'a> {
    pub fn new(values: &'a [f64], d: usize) -> Result<Self> {
        if d == 0 || values.len() % d != 0 {
            return Err(Error::invalid(format!(
                "{} values do not form rows of width {d}",
                values.len()
            )));
        }
        Ok(MatrixView {
            values,
            n: values.len() / d,
            d,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
}

impl<'a> From<&'a FeatureMatrix> for MatrixView<'a> {
    fn from(m: &'a FeatureMatrix) -> Self {
        MatrixView {
            values: &m.values,
            n: m.n_rows(),
            d: m.n_cols(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kmeans,
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Kmeans => "kmeans",
            Method::Hierarchical => "hierarchical",
        })
    }
}

/// Per-row cluster labels in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    pub method: Method,
    pub metric: Metric,
    /// Inertia for k-means, cut height for hierarchical.
    pub objective: f64,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Checks that labels are in range and no cluster is empty.
    pub fn check(&self) -> Result<()> {
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.k) {
            return Err(Error::invalid(format!("label {bad} out of range for k={}", self.k)));
        }
        if let Some(empty) = self.sizes().iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("cluster {empty} is empty")));
        }
        Ok(())
    }

    /// Relabels clusters by descending size (ties: smallest first row index).
    pub fn canonicalize(&mut self) -> Vec<usize> {
        let sizes = self.sizes();
        let mut first = vec![usize::MAX; self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            first[l] = first[l].min(i);
        }
        let mut order: Vec<usize> = (0..self.k).collect();
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(first[a].cmp(&first[b])));
        let mut map = vec![0; self.k];
        for (new, &old) in order.iter().enumerate() {
            map[old] = new;
        }
        for l in &mut self.labels {
            *l = map[*l];
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn record() -> AdmissionRecord {
        AdmissionRecord {
            admission_id: "a1".into(),
            patient_id: "p1".into(),
            age: 70.0,
            gender: Gender::F,
            admit_time: Utc.with_ymd_and_hms(2150, 1, 1, 0, 0, 0).unwrap(),
            discharge_time: Utc.with_ymd_and_hms(2150, 1, 5, 0, 0, 0).unwrap(),
            admission_type: AdmissionType::Emer,
            ventilation: false,
            icd_codes: BTreeSet::new(),
            cam_icu_positive_times: vec![],
            haloperidol_given: false,
            died_in_hospital: false,
            total_admission_count: 2,
            admission_rank_order: 1,
        }
    }

    #[test]
    fn catalog_has_table_sizes() {
        let c = feature_catalog();
        assert_eq!(c.variables.len(), 51);
        assert_eq!(c.ratios.len(), 6);
        assert_eq!(c.physio_columns().len(), N_PHYSIO);
        assert_eq!(c.predictor_columns().len(), 62);
    }

    #[test]
    fn catalog_contains_heart_rate() {
        let hr = feature_catalog().variable("heart_rate").unwrap();
        assert_eq!(hr.display_name, "Heart Rate");
        assert_eq!(hr.unit, "bpm");
        assert_eq!(hr.normal_mean, 88.41);
    }

    #[test]
    fn unknown_lookup_is_absent() {
        assert!(feature_catalog().variable("foo").is_none());
        assert!(feature_catalog().physio_index("foo").is_none());
    }

    #[test]
    fn ids_unique_and_means_finite() {
        let c = feature_catalog();
        let ids: BTreeSet<_> = c.predictor_columns().into_iter().collect();
        assert_eq!(ids.len(), N_PREDICTORS);
        assert!(c.variables.iter().all(|v| v.normal_mean.is_finite()));
    }

    #[test]
    fn ratios_resolve_to_base_variables() {
        let c = feature_catalog();
        let names: Vec<_> = c.ratios.iter().map(|r| r.display_name.as_str()).collect();
        assert_eq!(
            names,
            ["AST:ALT", "BUN:Creatinine", "FiO₂:PaO₂", "SO₂:FiO₂", "Neutrophils:Lymphocytes", "Platelets:RBC"]
        );
        assert_eq!(c.ratio_indices().len(), 6);
    }

    #[test]
    fn catalog_csv_is_stable() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        feature_catalog().write_csv(&mut a).unwrap();
        FeatureCatalog::build().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("id,display_name,unit,normal_mean\n"));
        assert_eq!(text.lines().count(), 52);
    }

    #[test]
    fn well_formed_record_has_no_violations() {
        assert!(validate_record(&record()).is_empty());
    }

    #[test]
    fn discharge_before_admit_is_negative_los() {
        let mut r = record();
        r.discharge_time = r.admit_time - chrono::Duration::hours(1);
        let v = validate_record(&r);
        assert_eq!(v, vec![RecordViolation::NegativeLos]);
        assert_eq!(v[0].to_string(), "negative LOS");
    }

    #[test]
    fn rank_above_total_is_violation() {
        let mut r = record();
        r.admission_rank_order = 3;
        r.total_admission_count = 2;
        assert_eq!(
            validate_record(&r),
            vec![RecordViolation::RankExceedsTotal { rank: 3, total: 2 }]
        );
    }

    #[test]
    fn canonicalize_orders_by_size() {
        let mut a = ClusterAssignment {
            labels: vec![0, 1, 1, 2, 2, 2],
            k: 3,
            method: Method::Kmeans,
            metric: Metric::Euclidean,
            objective: 0.0,
        };
        a.canonicalize();
        assert_eq!(a.labels, vec![2, 1, 1, 0, 0, 0]);
    }
}
