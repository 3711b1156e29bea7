//! Deterministic synthetic cohorts with planted subgroup structure.
//!
//! Physiology is generated in latent z-units per base variable and mapped to
//! physical units around the catalog means (log-normal for positive quantities). Delirium cases in a subgroup
//! with a planted signal have that feature shifted by `effect` spreads, which
//! makes the class log-odds rise by `effect` per spread of the feature.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{feature_catalog, AdmissionRecord, AdmissionType, Gender, Measurement, N_BASE};
use crate::error::{Error, Result};
use crate::ingest::{format_time, parse_admissions, write_admissions, DELIRIUM_ICD_CODES, MEASUREMENTS_HEADER};
use crate::rng::{rng, stage_seed, substream};

pub const ADMISSIONS_FILE: &str = "admissions.csv";
pub const MEASUREMENTS_FILE: &str = "measurements.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const GROUND_TRUTH_HEADER: [&str; 5] = [
    "admission_id",
    "planted_subgroup",
    "planted_signal_features",
    "is_case",
    "is_index",
];

const OTHER_ICD_CODES: [&str; 8] = ["I10", "E11.9", "J18.9", "N17.9", "I50.9", "K21.9", "E78.5", "J44.1"];
const WRITE_CHUNK: usize = 2048;

/// A subgroup-specific predictor of delirium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignal {
    pub subgroup: usize,
    /// Base variable id from the catalog.
    pub feature: String,
    /// Log-odds change per spread of the feature.
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_cases: usize,
    pub n_noncases: usize,
    pub k_planted: usize,
    /// Pairwise center distance in units of the largest spread.
    pub separation: f64,
    /// Base variables displaced per cluster when centers are generated;
    /// `None` shares all non-signal variables evenly.
    pub markers_per_cluster: Option<usize>,
    /// Explicit `k × 51` latent centers; sampled when absent.
    pub cluster_centers: Option<Vec<Vec<f64>>>,
    /// Per-cluster latent standard deviation.
    pub cluster_spreads: Vec<f64>,
    pub mixture_weights: Vec<f64>,
    pub delirium_signal: Vec<PlantedSignal>,
    /// Probability that a base variable is never measured for an admission.
    pub missing_rate: f64,
    /// A measurement is abnormal when it is this many catalog SDs from the catalog mean.
    pub abnormal_threshold: f64,
    /// Per-measurement noise as a fraction of the variable's scale.
    pub measurement_noise: f64,
    /// Probability of each of two extra readings per measured variable.
    pub repeat_prob: f64,
    /// Fraction of patients with a second, later admission.
    pub extra_admission_rate: f64,
    /// Admissions that every cohort rule should reject.
    pub n_decoys: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec::desk()
    }
}

impl SynthSpec {
    pub fn desk() -> Self {
        SynthSpec {
            n_cases: 2000,
            n_noncases: 20000,
            k_planted: 4,
            separation: 6.0,
            markers_per_cluster: None,
            cluster_centers: None,
            cluster_spreads: vec![1.0; 4],
            mixture_weights: vec![0.4, 0.3, 0.2, 0.1],
            delirium_signal: vec![PlantedSignal {
                subgroup: 0,
                feature: "lactate".into(),
                effect: 1.5,
            }],
            missing_rate: 0.05,
            abnormal_threshold: 1.5,
            measurement_noise: 0.1,
            repeat_prob: 0.25,
            extra_admission_rate: 0.1,
            n_decoys: 40,
            seed: 20240601,
        }
    }

    pub fn paper_scale() -> Self {
        SynthSpec {
            n_cases: 10066,
            n_noncases: 114324,
            n_decoys: 200,
            ..SynthSpec::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(SynthSpec::desk()),
            "paper-scale" => Ok(SynthSpec::paper_scale()),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected desk or paper-scale)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k_planted;
        let mut problems = Vec::new();
        if k < 2 {
            problems.push(format!("k_planted must be at least 2, got {k}"));
        }
        if self.mixture_weights.len() != k {
            problems.push(format!("mixture_weights has {} entries for k={k}", self.mixture_weights.len()));
        }
        let total: f64 = self.mixture_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.mixture_weights.iter().any(|w| !(*w > 0.0)) {
            problems.push(format!("mixture_weights must be positive and sum to 1 (sum {total})"));
        }
        if self.cluster_spreads.len() != k || self.cluster_spreads.iter().any(|s| !(*s > 0.0)) {
            problems.push(format!("cluster_spreads needs {k} positive entries"));
        }
        if let Some(c) = &self.cluster_centers {
            if c.len() != k || c.iter().any(|r| r.len() != N_BASE || r.iter().any(|v| !v.is_finite())) {
                problems.push(format!("cluster_centers must be {k} finite rows of {N_BASE} values"));
            }
        } else {
            if !(self.separation > 0.0) {
                problems.push("separation must be positive".into());
            }
            let free = N_BASE - self.delirium_signal.len();
            if matches!(self.markers_per_cluster, Some(m) if m == 0 || k * m > free) || k > free {
                problems.push(format!(
                    "markers_per_cluster must be positive with k × markers at most {free}"
                ));
            }
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            problems.push(format!("missing_rate {} must lie in [0, 1)", self.missing_rate));
        }
        if self.n_cases < k || self.n_noncases < k {
            problems.push("need at least k cases and k non-cases".into());
        }
        if !(0.0..=1.0).contains(&self.repeat_prob) || !(0.0..=1.0).contains(&self.extra_admission_rate) {
            problems.push("repeat_prob and extra_admission_rate must lie in [0, 1]".into());
        }
        if !(self.abnormal_threshold > 0.0) || !(self.measurement_noise >= 0.0) {
            problems.push("abnormal_threshold must be positive and measurement_noise non-negative".into());
        }
        for s in &self.delirium_signal {
            if s.subgroup >= k {
                problems.push(format!("signal subgroup {} out of range", s.subgroup));
            }
            if feature_catalog().variable_index(&s.feature).is_none() {
                problems.push(format!("signal feature `{}` is not a base variable", s.feature));
            }
            if !s.effect.is_finite() {
                problems.push("signal effect must be finite".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Signal features planted in `subgroup`.
    pub fn signals_for(&self, subgroup: usize) -> Vec<&PlantedSignal> {
        self.delirium_signal.iter().filter(|s| s.subgroup == subgroup).collect()
    }
}

/// Latent-to-physical scale of base variable `v`.
///
/// Positive quantities are log-normal around the catalog mean with this
/// log-scale; others are linear with the catalog SD.
pub fn value_scale(v: usize) -> f64 {
    let var = &feature_catalog().variables[v];
    if var.normal_mean > 0.0 {
        (var.sd / var.normal_mean).min(MAX_LOG_SCALE)
    } else {
        var.sd
    }
}

/// Caps the log-scale so ratios of positive variables keep moderate tails.
pub const MAX_LOG_SCALE: f64 = 0.25;

fn to_physical(v: usize, z: f64) -> f64 {
    let var = &feature_catalog().variables[v];
    if var.normal_mean > 0.0 {
        var.normal_mean * (value_scale(v) * z).exp()
    } else {
        var.normal_mean + value_scale(v) * z
    }
}

/// Expected value and SD of a per-admission mean for latent N(`z`, `spread`²)
/// observed with per-reading noise `noise`.
fn expected_moments(v: usize, z: f64, spread: f64, noise: f64) -> (f64, f64) {
    let s = value_scale(v);
    let var = &feature_catalog().variables[v];
    if var.normal_mean > 0.0 {
        let centre = var.normal_mean * (s * z).exp();
        let mean = centre * (s * s * (spread * spread + noise * noise) / 2.0).exp();
        let sd = centre * (s * s * spread * spread).exp().sqrt() * ((s * s * spread * spread).exp() - 1.0).sqrt();
        (mean, sd)
    } else {
        (to_physical(v, z), s * spread)
    }
}

/// Latent cluster centers (`k × 51`).
///
/// Unless given explicitly, each cluster is displaced on its own disjoint set
/// of `markers_per_cluster` base variables (never a planted signal feature),
/// with random signs, so every pair of centers is exactly
/// `separation × max spread` apart.
pub fn planted_centers(spec: &SynthSpec) -> Vec<Vec<f64>> {
    if let Some(c) = &spec.cluster_centers {
        return c.clone();
    }
    let catalog = feature_catalog();
    let signal: Vec<usize> = spec
        .delirium_signal
        .iter()
        .filter_map(|s| catalog.variable_index(&s.feature))
        .collect();
    let mut pool: Vec<usize> = (0..N_BASE).filter(|v| !signal.contains(v)).collect();
    let mut r = rng(stage_seed(spec.seed, "synth.centers"));
    pool.shuffle(&mut r);
    let m = spec.markers_per_cluster.unwrap_or(pool.len() / spec.k_planted);
    let max_spread = spec.cluster_spreads.iter().copied().fold(0.0, f64::max);
    let shift = spec.separation * max_spread / (2.0 * m as f64).sqrt();
    (0..spec.k_planted)
        .map(|c| {
            let mut centre = vec![0.0; N_BASE];
            for &v in &pool[c * m..(c + 1) * m] {
                centre[v] = if r.random::<bool>() { shift } else { -shift };
            }
            centre
        })
        .collect()
}

/// Splits `n` by `weights` with largest-remainder rounding.
fn allocate(n: usize, weights: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Case,
    NonCase,
    /// Later, non-delirious admission of an indexed patient.
    Extra,
    /// Admission that fails one cohort rule.
    Decoy(u8),
}

struct Planned {
    record: AdmissionRecord,
    role: Role,
    subgroup: usize,
    /// Latent physiology; `None` means no measurements at all.
    z: Option<Vec<f64>>,
}

/// Ground truth for one generated admission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub admission_id: String,
    pub planted_subgroup: usize,
    pub planted_signal_features: Vec<String>,
    pub is_case: bool,
    /// Survives exclusions and index selection.
    pub is_index: bool,
}

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2150, 1, 1, 0, 0, 0).unwrap()
}

fn admission_type(r: &mut impl Rng) -> AdmissionType {
    match r.random::<f64>() {
        u if u < 0.6 => AdmissionType::Emer,
        u if u < 0.75 => AdmissionType::Observation,
        u if u < 0.9 => AdmissionType::Surgical,
        _ => AdmissionType::Elective,
    }
}

fn base_record(r: &mut impl Rng, delirious: bool) -> AdmissionRecord {
    let g: f64 = StandardNormal.sample(r);
    let age = (65.0 + 15.0 * g).clamp(18.0, 100.0);
    let admit = base_time() + Duration::seconds(r.random_range(0..3650 * 86_400));
    let los_days = 1.0 + (-(1.0 - r.random::<f64>()).ln()) * 4.0;
    let discharge = admit + Duration::seconds((los_days * 86_400.0).ceil() as i64);
    let mut icd: std::collections::BTreeSet<String> = (0..r.random_range(1..4))
        .map(|_| OTHER_ICD_CODES[r.random_range(0..OTHER_ICD_CODES.len())].to_string())
        .collect();
    let mut cam = Vec::new();
    let mut halo = false;
    if delirious {
        // at least one trigger, each independently likely
        loop {
            if r.random::<f64>() < 0.6 {
                icd.insert(DELIRIUM_ICD_CODES[r.random_range(0..DELIRIUM_ICD_CODES.len())].to_string());
            }
            if r.random::<f64>() < 0.5 {
                let window = (discharge - admit).num_seconds() - 86_400;
                cam.push(admit + Duration::seconds(86_400 + r.random_range(0..=window.max(0))));
            }
            halo = r.random::<f64>() < 0.3;
            if halo || !cam.is_empty() || icd.iter().any(|c| DELIRIUM_ICD_CODES.contains(&c.as_str())) {
                break;
            }
        }
    }
    let total = 1 + r.random_range(0..3u32);
    AdmissionRecord {
        admission_id: String::new(),
        patient_id: String::new(),
        age: (age * 10.0).round() / 10.0,
        gender: if r.random::<bool>() { Gender::F } else { Gender::M },
        admit_time: admit,
        discharge_time: discharge,
        admission_type: admission_type(r),
        ventilation: r.random::<f64>() < 0.3,
        icd_codes: icd,
        cam_icu_positive_times: cam,
        haloperidol_given: halo,
        died_in_hospital: r.random::<f64>() < 0.1,
        total_admission_count: total,
        admission_rank_order: 1 + r.random_range(0..total),
    }
}

fn noise(r: &mut impl Rng) -> Vec<f64> {
    (0..N_BASE).map(|_| StandardNormal.sample(r)).collect()
}

fn plan(spec: &SynthSpec) -> Result<Vec<Planned>> {
    spec.validate()?;
    let centers = planted_centers(spec);
    let k = spec.k_planted;
    let catalog = feature_catalog();
    let seed = stage_seed(spec.seed, "synth.rows");

    let mut roles: Vec<(Role, usize)> = Vec::new();
    for (role, n) in [(Role::Case, spec.n_cases), (Role::NonCase, spec.n_noncases)] {
        for (c, count) in allocate(n, &spec.mixture_weights).into_iter().enumerate() {
            roles.extend(std::iter::repeat_n((role, c), count));
        }
    }
    let mut planned: Vec<Planned> = roles
        .par_iter()
        .enumerate()
        .map(|(i, &(role, c))| {
            let mut r = rng(substream(seed, i as u64));
            let record = base_record(&mut r, role == Role::Case);
            Planned {
                record,
                role,
                subgroup: c,
                z: Some(noise(&mut r)),
            }
        })
        .collect();

    for p in &mut planned {
        let spread = spec.cluster_spreads[p.subgroup];
        let z = p.z.as_mut().unwrap();
        for v in 0..N_BASE {
            z[v] = centers[p.subgroup][v] + spread * z[v];
        }
        if p.role == Role::Case {
            for sig in spec.signals_for(p.subgroup) {
                let v = catalog.variable_index(&sig.feature).unwrap();
                z[v] += sig.effect * spread;
            }
        }
    }

    // later admissions of indexed patients, and admissions that must be excluded
    let mut r = rng(stage_seed(spec.seed, "synth.extras"));
    let n_index = planned.len();
    let mut extras = Vec::new();
    for i in 0..n_index {
        if r.random::<f64>() >= spec.extra_admission_rate {
            continue;
        }
        let host = &planned[i];
        let mut rec = base_record(&mut r, false);
        let gap = Duration::days(r.random_range(30..400));
        let los = rec.discharge_time - rec.admit_time;
        rec.admit_time = host.record.discharge_time + gap;
        rec.discharge_time = rec.admit_time + los;
        rec.age = host.record.age;
        rec.gender = host.record.gender;
        rec.total_admission_count = 2.max(host.record.total_admission_count);
        rec.admission_rank_order = rec.total_admission_count;
        let spread = spec.cluster_spreads[host.subgroup];
        let z: Vec<f64> = noise(&mut r)
            .iter()
            .zip(&centers[host.subgroup])
            .map(|(e, c)| c + spread * e)
            .collect();
        extras.push((i, rec, host.subgroup, z));
    }
    for d in 0..spec.n_decoys {
        let kind = (d % 4) as u8;
        let c = r.random_range(0..k);
        let mut rec = base_record(&mut r, kind == 2);
        let spread = spec.cluster_spreads[c];
        let z: Vec<f64> = noise(&mut r).iter().zip(&centers[c]).map(|(e, m)| m + spread * e).collect();
        match kind {
            0 => rec.age = 17.0,
            1 => rec.discharge_time = rec.admit_time + Duration::hours(12),
            2 => rec.cam_icu_positive_times = vec![rec.admit_time + Duration::hours(2)],
            _ => {}
        }
        planned.push(Planned {
            record: rec,
            role: Role::Decoy(kind),
            subgroup: c,
            z: (kind != 3).then_some(z),
        });
    }

    // identifiers carry no information about role or subgroup
    let n_patients = n_index + spec.n_decoys;
    let mut patient_ids: Vec<usize> = (1..=n_patients).collect();
    patient_ids.shuffle(&mut r);
    let index_patient: Vec<usize> = (0..n_index).map(|i| patient_ids[i]).collect();
    for (i, p) in planned.iter_mut().enumerate() {
        p.record.patient_id = format!("P{:07}", patient_ids[i]);
    }
    for (host, mut rec, c, z) in extras {
        rec.patient_id = format!("P{:07}", index_patient[host]);
        planned.push(Planned {
            record: rec,
            role: Role::Extra,
            subgroup: c,
            z: Some(z),
        });
    }
    let mut admission_ids: Vec<usize> = (1..=planned.len()).collect();
    admission_ids.shuffle(&mut r);
    for (p, id) in planned.iter_mut().zip(admission_ids) {
        p.record.admission_id = format!("A{id:07}");
    }
    planned.sort_by(|a, b| a.record.admission_id.cmp(&b.record.admission_id));
    Ok(planned)
}

fn measurements_for(p: &Planned, spec: &SynthSpec, index: u64) -> Vec<Measurement> {
    let Some(z) = &p.z else {
        return Vec::new();
    };
    let catalog = feature_catalog();
    let mut r = rng(substream(stage_seed(spec.seed, "synth.measurements"), index));
    let los = (p.record.discharge_time - p.record.admit_time).num_seconds().max(1);
    let missing: Vec<bool> = (0..N_BASE).map(|_| r.random::<f64>() < spec.missing_rate).collect();
    let forced = missing.iter().all(|&m| m).then(|| r.random_range(0..N_BASE));
    let mut out = Vec::new();
    for v in 0..N_BASE {
        if missing[v] && forced != Some(v) {
            continue;
        }
        let var = &catalog.variables[v];
        let reps = 1 + (0..2).filter(|_| r.random::<f64>() < spec.repeat_prob).count();
        for _ in 0..reps {
            let e: f64 = StandardNormal.sample(&mut r);
            let value = to_physical(v, z[v] + spec.measurement_noise * e);
            let value = (value * 1e6).round() / 1e6;
            out.push(Measurement {
                admission_id: p.record.admission_id.clone(),
                variable: v,
                value,
                abnormal: (value - var.normal_mean).abs() > spec.abnormal_threshold * var.sd,
                time: p.record.admit_time + Duration::seconds(r.random_range(0..los)),
            });
        }
    }
    out.sort_by(|a, b| a.variable.cmp(&b.variable).then(a.time.cmp(&b.time)));
    out
}

fn truth_for(p: &Planned, spec: &SynthSpec) -> TruthRow {
    TruthRow {
        admission_id: p.record.admission_id.clone(),
        planted_subgroup: p.subgroup,
        planted_signal_features: spec.signals_for(p.subgroup).iter().map(|s| s.feature.clone()).collect(),
        is_case: p.role == Role::Case || p.role == Role::Decoy(2),
        is_index: matches!(p.role, Role::Case | Role::NonCase),
    }
}

/// A fully materialized synthetic cohort.
#[derive(Debug, Clone)]
pub struct SynthCohort {
    pub admissions: Vec<AdmissionRecord>,
    pub measurements: Vec<Measurement>,
    pub truth: Vec<TruthRow>,
}

/// Generates a cohort in memory. Rows are sorted by admission id.
pub fn generate_cohort(spec: &SynthSpec) -> Result<SynthCohort> {
    let planned = plan(spec)?;
    let measurements = planned
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| measurements_for(p, spec, i as u64))
        .collect();
    Ok(SynthCohort {
        truth: planned.iter().map(|p| truth_for(p, spec)).collect(),
        admissions: planned.into_iter().map(|p| p.record).collect(),
        measurements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub admissions: usize,
    pub index_cases: usize,
    pub index_noncases: usize,
    pub measurements: usize,
    pub files: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 20, f))
        .map_err(|e| Error::io(path, e))
}

fn write_measurement_rows<W: Write>(w: &mut csv::Writer<W>, ms: &[Measurement]) -> Result<()> {
    let names = &feature_catalog().variables;
    for m in ms {
        w.write_record([
            m.admission_id.as_str(),
            names[m.variable].id.as_str(),
            &m.value.to_string(),
            if m.abnormal { "1" } else { "0" },
            &format_time(&m.time),
        ])?;
    }
    Ok(())
}

pub fn write_truth<W: Write>(out: W, truth: &[TruthRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GROUND_TRUTH_HEADER)?;
    for t in truth {
        w.write_record([
            t.admission_id.as_str(),
            &t.planted_subgroup.to_string(),
            &t.planted_signal_features.join(";"),
            if t.is_case { "1" } else { "0" },
            if t.is_index { "1" } else { "0" },
        ])?;
    }
    w.flush().map_err(|e| Error::io("<ground truth>", e))?;
    Ok(())
}

/// Writes `admissions.csv`, `measurements.csv` and `ground_truth.csv` into `dir`.
///
/// Measurements are generated and written in chunks to bound memory.
pub fn write_cohort(spec: &SynthSpec, dir: &Path) -> Result<SynthSummary> {
    let planned = plan(spec)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let adm_path = dir.join(ADMISSIONS_FILE);
    let records: Vec<AdmissionRecord> = planned.iter().map(|p| p.record.clone()).collect();
    write_admissions(create(&adm_path)?, &records)?;
    drop(records);

    let meas_path = dir.join(MEASUREMENTS_FILE);
    let mut w = csv::Writer::from_writer(create(&meas_path)?);
    w.write_record(MEASUREMENTS_HEADER)?;
    let mut n_meas = 0;
    for (c, chunk) in planned.chunks(WRITE_CHUNK).enumerate() {
        let base = c * WRITE_CHUNK;
        let ms: Vec<Vec<Measurement>> = chunk
            .par_iter()
            .enumerate()
            .map(|(j, p)| measurements_for(p, spec, (base + j) as u64))
            .collect();
        for m in &ms {
            n_meas += m.len();
            write_measurement_rows(&mut w, m)?;
        }
    }
    w.flush().map_err(|e| Error::io(&meas_path, e))?;

    let truth_path = dir.join(GROUND_TRUTH_FILE);
    let truth: Vec<TruthRow> = planned.iter().map(|p| truth_for(p, spec)).collect();
    write_truth(create(&truth_path)?, &truth)?;
    Ok(SynthSummary {
        admissions: planned.len(),
        index_cases: planned.iter().filter(|p| p.role == Role::Case).count(),
        index_noncases: planned.iter().filter(|p| p.role == Role::NonCase).count(),
        measurements: n_meas,
        files: vec![adm_path, meas_path, truth_path],
    })
}

/// Reads `ground_truth.csv`.
pub fn read_truth(path: &Path) -> Result<Vec<TruthRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{}: {other:?}", path.display())),
    })?;
    let header = rdr.headers()?.clone();
    if header.iter().ne(GROUND_TRUTH_HEADER) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: GROUND_TRUTH_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("column {what}: invalid value"),
        };
        out.push(TruthRow {
            admission_id: rec[0].to_string(),
            planted_subgroup: rec[1].parse().map_err(|_| bad("planted_subgroup"))?,
            planted_signal_features: rec[2].split(';').filter(|s| !s.is_empty()).map(String::from).collect(),
            is_case: &rec[3] == "1",
            is_index: &rec[4] == "1",
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub checks: Vec<Check>,
}

impl SelfCheckReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Turns failed checks into an error listing each offending statistic.
    pub fn ensure(self) -> Result<Self> {
        let failed: Vec<String> = self
            .failures()
            .iter()
            .map(|c| format!("{}: observed {:.6}, expected {:.6} ± {:.6}", c.name, c.observed, c.expected, c.tolerance))
            .collect();
        if failed.is_empty() {
            Ok(self)
        } else {
            Err(Error::SelfCheck(failed))
        }
    }
}

fn check(name: String, observed: f64, expected: f64, tolerance: f64) -> Check {
    Check {
        passed: (observed - expected).abs() <= tolerance,
        name,
        observed,
        expected,
        tolerance,
    }
}

/// Šidák-adjusted multiplier giving `m` two-sided checks the same joint
/// false-alarm rate as one check at `z` standard errors.
pub fn family_z(z: f64, m: usize) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let n = Normal::standard();
    let alpha = 2.0 * n.sf(z);
    let per = -(-alpha).ln_1p() / m.max(1) as f64;
    let per = -(-per).exp_m1();
    z.max(n.inverse_cdf(1.0 - per / 2.0))
}

/// Re-reads generated files and compares their statistics with the requested `SynthSpec`.
pub fn self_check(spec: &SynthSpec, dir: &Path) -> Result<SelfCheckReport> {
    spec.validate()?;
    let admissions = parse_admissions(&dir.join(ADMISSIONS_FILE))?;
    let truth = read_truth(&dir.join(GROUND_TRUTH_FILE))?;
    let index: BTreeMap<&str, &TruthRow> = truth
        .iter()
        .filter(|t| t.is_index)
        .map(|t| (t.admission_id.as_str(), t))
        .collect();
    if admissions.len() != truth.len() {
        return Err(Error::SelfCheck(vec![format!(
            "{} admissions but {} ground-truth rows",
            admissions.len(),
            truth.len()
        )]));
    }
    let slot: BTreeMap<&str, usize> = index.keys().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut sums = vec![[0.0f64; N_BASE]; slot.len()];
    let mut counts = vec![[0u32; N_BASE]; slot.len()];
    crate::ingest::for_each_measurement(&dir.join(MEASUREMENTS_FILE), |m| {
        if let Some(&s) = slot.get(m.admission_id.as_str()) {
            sums[s][m.variable] += m.value;
            counts[s][m.variable] += 1;
        }
    })?;

    let mut checks = Vec::new();
    let k = spec.k_planted;
    let n_index = index.len() as f64;
    for c in 0..k {
        let observed = index.values().filter(|t| t.planted_subgroup == c).count() as f64 / n_index;
        checks.push(check(format!("mixture weight {c}"), observed, spec.mixture_weights[c], 0.02));
    }
    let cells = (slot.len() * N_BASE) as f64;
    let missing = counts.iter().flatten().filter(|&&n| n == 0).count() as f64;
    checks.push(check("missing rate".into(), missing / cells, spec.missing_rate, 0.01));

    let centers = planted_centers(spec);
    let catalog = feature_catalog();
    let mut means = Vec::new();
    for case in [true, false] {
        for c in 0..k {
            let members: Vec<usize> = index
                .iter()
                .filter(|(_, t)| t.is_case == case && t.planted_subgroup == c)
                .map(|(id, _)| slot[id])
                .collect();
            for v in 0..N_BASE {
                let vals: Vec<f64> = members
                    .iter()
                    .filter(|&&s| counts[s][v] > 0)
                    .map(|&s| sums[s][v] / counts[s][v] as f64)
                    .collect();
                if vals.is_empty() {
                    continue;
                }
                let mut z = centers[c][v];
                if case {
                    for sig in spec.signals_for(c) {
                        if catalog.variable_index(&sig.feature) == Some(v) {
                            z += sig.effect * spec.cluster_spreads[c];
                        }
                    }
                }
                let (expected, sigma) = expected_moments(v, z, spec.cluster_spreads[c], spec.measurement_noise);
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let role = if case { "case" } else { "non-case" };
                means.push((
                    format!("{role} subgroup {c} mean of {}", catalog.variables[v].id),
                    mean,
                    expected,
                    sigma / (vals.len() as f64).sqrt(),
                ));
            }
        }
    }
    let z = family_z(3.0, means.len());
    for (name, mean, expected, se) in means {
        checks.push(check(name, mean, expected, z * se));
    }
    Ok(SelfCheckReport { checks })
}
