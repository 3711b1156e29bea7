//! End-to-end orchestration: ingest, preprocess, discover, validate, expand,
//! characterize and model, then write the report bundle.

mod bundle;
mod config;
mod features;
mod stages;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use bundle::{write_bundle, BUNDLE_FILES, PLOT_FILES};
pub use config::{overlay, CharacterizationConfig, ClusteringConfig, EmbeddingConfig, ExpansionConfig, FScoreClass, ModelConfig, RunConfig, ValidationConfig};
pub use features::{demographic_values, leading_columns, prepare_features, PreparedFeatures};
pub use stages::{
    characterize_subgroups, discover_subgroups, expand_clusters, outcome_summary, scope_name, train_subgroup_models,
    validate_feature_set, CategoricalTest, Characterization, Discovery, Expansion, FeatureSetValidation,
    MetricEmbedding, ModelScore, OutcomeSummary, ScopeReport, SubgroupModelReport, SubgroupProfile,
    MIN_CLUSTER_FOR_SPLIT, MODEL_NAMES,
};

use crate::domain::{AdmissionRecord, FeatureMatrix, N_PHYSIO};
use crate::error::{Error, Result};
use crate::ingest::{apply_exclusions, parse_admissions, parse_measurements, select_index_admissions, Cohort, ExclusionReason};
use crate::preprocess::compute_global_normal_means;
use crate::rng::stage_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_admissions_read: usize,
    pub n_measurements_read: usize,
    pub dropped_measurements: usize,
    pub exclusions: BTreeMap<ExclusionReason, usize>,
    pub n_cases: usize,
    pub n_noncases: usize,
    pub imputed_cells: usize,
    pub zero_denominators: usize,
    pub k: usize,
    pub kappa: f64,
    pub unstable_clustering: bool,
    pub validation_accuracy: f64,
    pub validation_macro_f: f64,
    pub expansion_histogram: Vec<usize>,
    pub unassigned_noncases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    /// Methodological choices the results depend on.
    pub method_notes: Vec<String>,
    pub timings: Vec<StageTiming>,
    pub warnings: Vec<String>,
    pub summary: RunSummary,
}

/// Everything a run produced, in memory.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub features: PreparedFeatures,
    pub discovery: Discovery,
    pub validation: FeatureSetValidation,
    pub expansion: Expansion,
    pub characterization: Characterization,
    /// Table II rows: delirium then non-delirium.
    pub demographics: Vec<(String, OutcomeSummary)>,
    pub models: SubgroupModelReport,
}

pub const STAGES: [&str; 7] = [
    "ingest",
    "preprocess",
    "discover",
    "validate",
    "expand",
    "characterize",
    "model",
];

struct Timer {
    timings: Vec<StageTiming>,
    start: Instant,
}

impl Timer {
    fn lap(&mut self, stage: &str) {
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: self.start.elapsed().as_secs_f64(),
        });
        self.start = Instant::now();
    }
}

/// Reads the inputs and applies the cohort rules. Returns the cohort, the
/// global normal means and `(admissions, measurements, dropped)` counts.
pub fn ingest_cohort(cfg: &RunConfig) -> Result<(Cohort, Vec<f64>, [usize; 3])> {
    let admissions = parse_admissions(&cfg.admissions)?;
    let parsed = parse_measurements(&cfg.measurements)?;
    let global = compute_global_normal_means(&parsed.measurements);
    let counts = [admissions.len(), parsed.measurements.len(), parsed.dropped_unknown];
    let cohort = Cohort::assemble(admissions, parsed.measurements, &cfg.cohort);
    let cohort = select_index_admissions(apply_exclusions(cohort, &cfg.cohort));
    Ok((cohort, global, counts))
}

/// Runs every stage and writes the bundle into `cfg.output_dir`.
pub fn run_full_pipeline(cfg: &RunConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let seed = cfg.seed.expect("validated");
    let mut timer = Timer {
        timings: Vec::new(),
        start: Instant::now(),
    };
    let mut warnings = Vec::new();

    let (cohort, global, [n_adm, n_meas, dropped]) = ingest_cohort(cfg).map_err(|e| e.in_stage("ingest"))?;
    if dropped > 0 {
        warnings.push(format!("{dropped} measurements with unknown variable ids were dropped"));
    }
    timer.lap("ingest");

    let features = prepare_features(&cohort, &global).map_err(|e| e.in_stage("preprocess"))?;
    let exclusions = cohort.exclusion_counts();
    drop(cohort);
    if features.cases.is_empty() {
        return Err(Error::invalid("no delirium cases remain after exclusions").in_stage("preprocess"));
    }
    if features.zero_denominators > 0 {
        warnings.push(format!("{} ratios had a zero denominator and were imputed", features.zero_denominators));
    }
    let case_phys = features.case_physio_z();
    timer.lap("preprocess");

    let discovery =
        discover_subgroups(&case_phys, &cfg.clustering, &cfg.embedding, seed).map_err(|e| e.in_stage("discover"))?;
    if discovery.unstable {
        warnings.push(format!(
            "clustering unstable: kappa {:.3} is below {}",
            discovery.kappa, cfg.clustering.kappa_threshold
        ));
    }
    timer.lap("discover");

    let validation =
        validate_feature_set(&case_phys, &discovery.kmeans, &cfg.validation, seed).map_err(|e| e.in_stage("validate"))?;
    timer.lap("validate");

    let expansion = expand_clusters(&validation.model, &features.noncase_physio_z(), cfg.expansion.min_probability)
        .map_err(|e| e.in_stage("expand"))?;
    timer.lap("expand");

    let k = discovery.k;
    let labels = &discovery.kmeans.labels;
    let characterization = characterize_subgroups(
        &features.cases,
        &leading_columns(&features.case_raw, N_PHYSIO),
        &case_phys,
        labels,
        k,
        cfg.characterization.comparison,
    )
    .map_err(|e| e.in_stage("characterize"))?;
    let total = features.cases.len() + features.noncases.len();
    let demographics = vec![
        ("delirium".to_string(), outcome_summary(&features.cases.iter().collect::<Vec<&AdmissionRecord>>(), total)),
        (
            "non_delirium".to_string(),
            outcome_summary(&features.noncases.iter().collect::<Vec<&AdmissionRecord>>(), total),
        ),
    ];
    timer.lap("characterize");

    let combined = stack(&features.case_z, &features.noncase_z)?;
    let y: Vec<usize> = (0..combined.n_rows()).map(|i| usize::from(i < features.cases.len())).collect();
    let subgroup: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).chain(expansion.labels.iter().copied()).collect();
    let models = train_subgroup_models(&combined, &y, &subgroup, k, &cfg.models, seed).map_err(|e| e.in_stage("model"))?;
    warnings.extend(models.warnings.iter().cloned());
    timer.lap("model");

    let stage_seeds = [
        "discover.select_k",
        "discover.kmeans",
        "discover.tsne_sample",
        "discover.tsne.euclidean",
        "discover.tsne.cosine",
        "validate.split",
        "models",
    ]
    .iter()
    .map(|s| (s.to_string(), stage_seed(seed, s)))
    .collect();
    let summary = RunSummary {
        n_admissions_read: n_adm,
        n_measurements_read: n_meas,
        dropped_measurements: dropped,
        exclusions,
        n_cases: features.cases.len(),
        n_noncases: features.noncases.len(),
        imputed_cells: features.imputed_cells,
        zero_denominators: features.zero_denominators,
        k,
        kappa: discovery.kappa,
        unstable_clustering: discovery.unstable,
        validation_accuracy: validation.accuracy,
        validation_macro_f: validation.macro_f,
        expansion_histogram: expansion.histogram.clone(),
        unassigned_noncases: expansion.labels.iter().filter(|l| l.is_none()).count(),
    };
    let mut bundle = ReportBundle {
        dir: cfg.output_dir.clone(),
        manifest: RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            master_seed: seed,
            stage_seeds,
            method_notes: method_notes(cfg),
            timings: Vec::new(),
            warnings,
            summary,
        },
        features,
        discovery,
        validation,
        expansion,
        characterization,
        demographics,
        models,
    };
    bundle.manifest.timings = timer.timings;
    write_bundle(&bundle, cfg.write_plots).map_err(|e| e.in_stage("report"))?;
    Ok(bundle)
}

fn method_notes(cfg: &RunConfig) -> Vec<String> {
    let c = &cfg.clustering;
    let linkage = c.linkage.unwrap_or(crate::cluster::Linkage::default_for(c.metric));
    vec![
        "exclusion rules are applied per admission; each patient then keeps one index admission".into(),
        "all 57 physiological features, the 6 ratios included, are z-scored with the delirium-cohort scaler".into(),
        "non-delirium admissions are transformed with the delirium-cohort scaler, not refit".into(),
        format!("clustering metric {}, hierarchical linkage {}", c.metric.as_str(), linkage),
        format!(
            "heterogeneity p-values use the two-sided Mann-Whitney rank-sum test, {}",
            match cfg.characterization.comparison {
                crate::stats::Comparison::OneVsRest => "one subgroup against the rest",
                crate::stats::Comparison::Pairwise => "averaged over subgroup pairs",
            }
        ),
        format!(
            "model_metrics f_score column reports the {} class",
            match cfg.models.f_score_class {
                FScoreClass::Majority => "majority",
                FScoreClass::Delirium => "delirium",
            }
        ),
    ]
}

/// Stacks two matrices with identical columns.
pub fn stack(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    if a.column_ids != b.column_ids {
        return Err(Error::ColumnMismatch("stacked matrices must share columns".into()));
    }
    let mut out = a.clone();
    out.row_ids.extend(b.row_ids.iter().cloned());
    out.values.extend_from_slice(&b.values);
    out.missing_mask.extend_from_slice(&b.missing_mask);
    Ok(out)
}
