//! CSV ingestion, delirium labelling, exclusion cascade and index-admission selection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{feature_catalog, AdmissionRecord, AdmissionType, Gender, Measurement};
use crate::error::{Error, Result};

pub const ADMISSIONS_HEADER: [&str; 14] = [
    "admission_id",
    "patient_id",
    "age",
    "gender",
    "admit_time",
    "discharge_time",
    "admission_type",
    "ventilation",
    "icd_codes",
    "cam_icu_positive_times",
    "haloperidol_given",
    "died_in_hospital",
    "total_admission_count",
    "admission_rank_order",
];

pub const MEASUREMENTS_HEADER: [&str; 5] = ["admission_id", "variable_id", "value", "abnormal", "time"];

/// ICD-9 and ICD-10 codes used to ascertain delirium.
pub const DELIRIUM_ICD_CODES: [&str; 50] = [
    "290.11", "290.3", "290.41", "291.0", "291.1", "292.81", "292.89", "293.0", "293.1", "308.9",
    "780.09", "F05", "F01.51", "F02.81", "F03.91", "F10.221", "F10.231", "F10.921", "F10.96",
    "F10.121", "F11.121", "F11.221", "F11.921", "F12.121", "F12.221", "F12.921", "F13.121",
    "F13.221", "F13.231", "F13.921", "F13.931", "F14.121", "F14.221", "F14.921", "F15.121",
    "F15.221", "F15.921", "F16.121", "F16.221", "F16.921", "F18.121", "F18.221", "F18.921",
    "F19.121", "F19.221", "F19.231", "F19.921", "F19.931", "R41.0", "F43.0",
];

/// Cohort selection rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub delirium_icd_codes: BTreeSet<String>,
    /// Sensory or cognitive disability codes. Empty unless configured.
    pub disqualifying_icd_codes: BTreeSet<String>,
    pub min_age: f64,
    pub min_los_days: f64,
    pub exclude_delirium_within_hours: f64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            delirium_icd_codes: DELIRIUM_ICD_CODES.iter().map(|c| c.to_string()).collect(),
            disqualifying_icd_codes: BTreeSet::new(),
            min_age: 18.0,
            min_los_days: 1.0,
            exclude_delirium_within_hours: 24.0,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.delirium_icd_codes.is_empty() {
            return Err(Error::Config("delirium_icd_codes must not be empty".into()));
        }
        for (name, v) in [
            ("min_age", self.min_age),
            ("min_los_days", self.min_los_days),
            ("exclude_delirium_within_hours", self.exclude_delirium_within_hours),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExclusionReason {
    Age,
    Los,
    Disability,
    NoMeasurements,
    EarlyDelirium,
    NotIndexAdmission,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusionReason::Age => "AGE",
            ExclusionReason::Los => "LOS",
            ExclusionReason::Disability => "DISABILITY",
            ExclusionReason::NoMeasurements => "NO_MEASUREMENTS",
            ExclusionReason::EarlyDelirium => "EARLY_DELIRIUM",
            ExclusionReason::NotIndexAdmission => "NOT_INDEX_ADMISSION",
        })
    }
}

/// Which rules fired when labelling an admission as delirious.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliriumTriggers {
    pub icd: bool,
    pub cam_icu: bool,
    pub haloperidol: bool,
}

impl DeliriumTriggers {
    pub fn any(&self) -> bool {
        self.icd || self.cam_icu || self.haloperidol
    }
}

pub fn delirium_triggers(r: &AdmissionRecord, spec: &CohortSpec) -> DeliriumTriggers {
    DeliriumTriggers {
        icd: r
            .icd_codes
            .iter()
            .any(|c| spec.delirium_icd_codes.contains(c.trim())),
        cam_icu: !r.cam_icu_positive_times.is_empty(),
        haloperidol: r.haloperidol_given,
    }
}

/// Inclusive disjunction of the ICD, CAM-ICU and haloperidol triggers.
pub fn label_delirium(r: &AdmissionRecord, spec: &CohortSpec) -> bool {
    delirium_triggers(r, spec).any()
}

/// Admissions with their measurements, labels and exclusion log.
#[derive(Debug, Clone, Default)]
pub struct Cohort {
    /// Sorted by `admission_id`.
    pub admissions: Vec<AdmissionRecord>,
    pub measurements: BTreeMap<String, Vec<Measurement>>,
    pub delirium_label: BTreeMap<String, bool>,
    pub triggers: BTreeMap<String, DeliriumTriggers>,
    pub exclusion_log: BTreeMap<String, ExclusionReason>,
}

impl Cohort {
    /// Groups measurements by admission and labels every admission.
    pub fn assemble(
        mut admissions: Vec<AdmissionRecord>,
        measurements: Vec<Measurement>,
        spec: &CohortSpec,
    ) -> Self {
        admissions.sort_by(|a, b| a.admission_id.cmp(&b.admission_id));
        let mut by_adm: BTreeMap<String, Vec<Measurement>> = BTreeMap::new();
        for m in measurements {
            by_adm.entry(m.admission_id.clone()).or_default().push(m);
        }
        let mut delirium_label = BTreeMap::new();
        let mut triggers = BTreeMap::new();
        for a in &admissions {
            let t = delirium_triggers(a, spec);
            delirium_label.insert(a.admission_id.clone(), t.any());
            triggers.insert(a.admission_id.clone(), t);
        }
        Cohort {
            admissions,
            measurements: by_adm,
            delirium_label,
            triggers,
            exclusion_log: BTreeMap::new(),
        }
    }

    pub fn is_delirious(&self, admission_id: &str) -> bool {
        self.delirium_label.get(admission_id).copied().unwrap_or(false)
    }

    pub fn measurement_count(&self, admission_id: &str) -> usize {
        self.measurements.get(admission_id).map_or(0, Vec::len)
    }

    fn remove(&mut self, keep: impl Fn(&AdmissionRecord) -> Option<ExclusionReason>) {
        let mut kept = Vec::with_capacity(self.admissions.len());
        for a in std::mem::take(&mut self.admissions) {
            match keep(&a) {
                None => kept.push(a),
                Some(reason) => {
                    self.measurements.remove(&a.admission_id);
                    self.delirium_label.remove(&a.admission_id);
                    self.triggers.remove(&a.admission_id);
                    self.exclusion_log.insert(a.admission_id, reason);
                }
            }
        }
        self.admissions = kept;
    }

    pub fn exclusion_counts(&self) -> BTreeMap<ExclusionReason, usize> {
        let mut out = BTreeMap::new();
        for r in self.exclusion_log.values() {
            *out.entry(*r).or_insert(0) += 1;
        }
        out
    }
}

/// Reason an admission fails the eligibility rules, checked in a fixed order.
pub fn exclusion_reason(
    a: &AdmissionRecord,
    delirious: bool,
    n_measurements: usize,
    spec: &CohortSpec,
) -> Option<ExclusionReason> {
    if a.age < spec.min_age {
        return Some(ExclusionReason::Age);
    }
    if a.los_days() < spec.min_los_days {
        return Some(ExclusionReason::Los);
    }
    if a
        .icd_codes
        .iter()
        .any(|c| spec.disqualifying_icd_codes.contains(c.trim()))
    {
        return Some(ExclusionReason::Disability);
    }
    if n_measurements == 0 {
        return Some(ExclusionReason::NoMeasurements);
    }
    if delirious {
        let window_ms = (spec.exclude_delirium_within_hours * 3_600_000.0) as i64;
        let cutoff = a.admit_time + chrono::Duration::milliseconds(window_ms);
        if a.cam_icu_positive_times.iter().any(|&t| t < cutoff) {
            return Some(ExclusionReason::EarlyDelirium);
        }
    }
    None
}

/// Removes ineligible admissions, logging one reason per removal.
pub fn apply_exclusions(mut cohort: Cohort, spec: &CohortSpec) -> Cohort {
    let decisions: BTreeMap<String, ExclusionReason> = cohort
        .admissions
        .iter()
        .filter_map(|a| {
            exclusion_reason(
                a,
                cohort.is_delirious(&a.admission_id),
                cohort.measurement_count(&a.admission_id),
                spec,
            )
            .map(|r| (a.admission_id.clone(), r))
        })
        .collect();
    cohort.remove(|a| decisions.get(&a.admission_id).copied());
    cohort
}

/// Keeps one admission per patient: the earliest delirious admission for
/// delirium patients, the earliest admission otherwise. Ties on admit time
/// go to the lower admission id.
pub fn select_index_admissions(mut cohort: Cohort) -> Cohort {
    let mut best: BTreeMap<&str, (bool, DateTime<Utc>, &str)> = BTreeMap::new();
    for a in &cohort.admissions {
        let delirious = cohort.is_delirious(&a.admission_id);
        let cand = (delirious, a.admit_time, a.admission_id.as_str());
        best.entry(a.patient_id.as_str())
            .and_modify(|cur| {
                // a delirious admission always beats a non-delirious one
                let better = match (cand.0, cur.0) {
                    (true, false) => true,
                    (false, true) => false,
                    _ => (cand.1, cand.2) < (cur.1, cur.2),
                };
                if better {
                    *cur = cand;
                }
            })
            .or_insert(cand);
    }
    let keep: BTreeSet<String> = best.values().map(|(_, _, id)| id.to_string()).collect();
    cohort.remove(|a| {
        if keep.contains(&a.admission_id) {
            None
        } else {
            Some(ExclusionReason::NotIndexAdmission)
        }
    });
    cohort
}

pub(crate) fn parse_time(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    None
}

pub(crate) fn format_time(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" | "TRUE" => Some(true),
        "0" | "false" | "FALSE" => Some(false),
        _ => None,
    }
}

struct RowCtx<'a> {
    path: &'a Path,
    line: u64,
    header: &'a [&'static str],
    record: &'a csv::StringRecord,
}

impl RowCtx<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message: msg.into(),
        }
    }

    fn field(&self, i: usize) -> Result<&str> {
        match self.record.get(i).map(str::trim) {
            Some(s) if !s.is_empty() => Ok(s),
            _ => Err(self.err(format!("column {}: missing value", self.header[i]))),
        }
    }

    fn optional(&self, i: usize) -> &str {
        self.record.get(i).map(str::trim).unwrap_or("")
    }

    fn parse<T>(&self, i: usize, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<T> {
        let raw = self.field(i)?;
        f(raw).ok_or_else(|| self.err(format!("column {}: invalid {what} `{raw}`", self.header[i])))
    }
}

fn open_reader(path: &Path, header: &[&'static str]) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let found = rdr.headers()?.clone();
    let found_cols: Vec<&str> = found.iter().map(str::trim).collect();
    if found_cols != header {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: header.join(","),
            found: found_cols.join(","),
        });
    }
    Ok(rdr)
}

fn parse_number<T: std::str::FromStr>(s: &str) -> Option<T> {
    s.parse().ok()
}

/// Reads `admissions.csv`. One record per row; list fields are `;`-separated.
pub fn parse_admissions(path: &Path) -> Result<Vec<AdmissionRecord>> {
    let mut rdr = open_reader(path, &ADMISSIONS_HEADER)?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let ctx = RowCtx {
            path,
            line: record.position().map_or(0, |p| p.line()),
            header: &ADMISSIONS_HEADER,
            record: &record,
        };
        if record.len() != ADMISSIONS_HEADER.len() {
            return Err(ctx.err(format!(
                "expected {} fields, found {}",
                ADMISSIONS_HEADER.len(),
                record.len()
            )));
        }
        let age: f64 = ctx.parse(2, "number", parse_number)?;
        if !age.is_finite() {
            return Err(ctx.err("column age: not finite"));
        }
        let cam_raw = ctx.optional(9);
        let mut cam_icu_positive_times = Vec::new();
        for t in cam_raw.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            cam_icu_positive_times.push(
                parse_time(t)
                    .ok_or_else(|| ctx.err(format!("column cam_icu_positive_times: invalid timestamp `{t}`")))?,
            );
        }
        let rec = AdmissionRecord {
            admission_id: ctx.field(0)?.to_string(),
            patient_id: ctx.field(1)?.to_string(),
            age,
            gender: ctx.parse(3, "gender", Gender::parse)?,
            admit_time: ctx.parse(4, "timestamp", parse_time)?,
            discharge_time: ctx.parse(5, "timestamp", parse_time)?,
            admission_type: ctx.parse(6, "admission type", AdmissionType::parse)?,
            ventilation: ctx.parse(7, "boolean", parse_bool)?,
            icd_codes: ctx
                .optional(8)
                .split(';')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(str::to_string)
                .collect(),
            cam_icu_positive_times,
            haloperidol_given: ctx.parse(10, "boolean", parse_bool)?,
            died_in_hospital: ctx.parse(11, "boolean", parse_bool)?,
            total_admission_count: ctx.parse(12, "integer", parse_number)?,
            admission_rank_order: ctx.parse(13, "integer", parse_number)?,
        };
        out.push(rec);
    }
    Ok(out)
}

/// Parsed measurements plus the number of rows dropped for unknown variable ids.
#[derive(Debug, Clone, Default)]
pub struct ParsedMeasurements {
    pub measurements: Vec<Measurement>,
    pub dropped_unknown: usize,
}

/// Streams `measurements.csv`, calling `sink` for every row whose variable is
/// in the catalog. Returns the number of rows dropped.
pub fn for_each_measurement(path: &Path, mut sink: impl FnMut(Measurement)) -> Result<usize> {
    let catalog = feature_catalog();
    let mut rdr = open_reader(path, &MEASUREMENTS_HEADER)?;
    let mut record = csv::StringRecord::new();
    let mut dropped = 0;
    while rdr.read_record(&mut record)? {
        let ctx = RowCtx {
            path,
            line: record.position().map_or(0, |p| p.line()),
            header: &MEASUREMENTS_HEADER,
            record: &record,
        };
        if record.len() != MEASUREMENTS_HEADER.len() {
            return Err(ctx.err(format!(
                "expected {} fields, found {}",
                MEASUREMENTS_HEADER.len(),
                record.len()
            )));
        }
        let value: f64 = ctx.parse(2, "number", parse_number)?;
        if !value.is_finite() {
            return Err(ctx.err("column value: not finite"));
        }
        let Some(variable) = catalog.variable_index(ctx.field(1)?) else {
            dropped += 1;
            continue;
        };
        sink(Measurement {
            admission_id: ctx.field(0)?.to_string(),
            variable,
            value,
            abnormal: ctx.parse(3, "boolean", parse_bool)?,
            time: ctx.parse(4, "timestamp", parse_time)?,
        });
    }
    Ok(dropped)
}

pub fn parse_measurements(path: &Path) -> Result<ParsedMeasurements> {
    let mut measurements = Vec::new();
    let dropped_unknown = for_each_measurement(path, |m| measurements.push(m))?;
    Ok(ParsedMeasurements {
        measurements,
        dropped_unknown,
    })
}

/// Writes admissions in the `admissions.csv` schema.
pub fn write_admissions<W: std::io::Write>(out: W, admissions: &[AdmissionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ADMISSIONS_HEADER)?;
    let b = |v: bool| if v { "1" } else { "0" };
    for a in admissions {
        let icd = a.icd_codes.iter().cloned().collect::<Vec<_>>().join(";");
        let cam = a
            .cam_icu_positive_times
            .iter()
            .map(format_time)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            a.admission_id.as_str(),
            a.patient_id.as_str(),
            &a.age.to_string(),
            a.gender.as_str(),
            &format_time(&a.admit_time),
            &format_time(&a.discharge_time),
            a.admission_type.as_str(),
            b(a.ventilation),
            &icd,
            &cam,
            b(a.haloperidol_given),
            b(a.died_in_hospital),
            &a.total_admission_count.to_string(),
            &a.admission_rank_order.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<admissions>", e))?;
    Ok(())
}
