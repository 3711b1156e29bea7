//! Run configuration, presets and validation.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cluster::{KMeansConfig, Linkage, SelectKConfig};
use crate::domain::Metric;
use crate::embed::TsneConfig;
use crate::error::{Error, Result};
use crate::ingest::CohortSpec;
use crate::learn::{ForestConfig, GbdtConfig, LogisticConfig};
use crate::stats::Comparison;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    /// Metric for k selection, k-means and the hierarchical comparison.
    pub metric: Metric,
    pub k_min: usize,
    pub k_max: usize,
    pub kmeans: KMeansConfig,
    /// Defaults to ward for euclidean, average for cosine.
    pub linkage: Option<Linkage>,
    pub silhouette_sample: Option<usize>,
    /// Also report the hierarchical silhouette profile.
    pub profile_hierarchical: bool,
    /// Kappa below this marks the clustering as unstable.
    pub kappa_threshold: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            metric: Metric::Euclidean,
            k_min: 2,
            k_max: 10,
            kmeans: KMeansConfig::default(),
            linkage: None,
            silhouette_sample: None,
            profile_hierarchical: true,
            kappa_threshold: 0.5,
        }
    }
}

impl ClusteringConfig {
    pub fn select_k(&self) -> SelectKConfig {
        SelectKConfig {
            k_min: self.k_min,
            k_max: self.k_max,
            kmeans: self.kmeans,
            linkage: self.linkage,
            silhouette_sample: self.silhouette_sample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub enabled: bool,
    /// Embed a seeded sample of this many cases when the cohort is larger.
    pub subsample: Option<usize>,
    /// Seed and metric are set per run.
    pub tsne: TsneConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            enabled: true,
            subsample: Some(2000),
            tsne: TsneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub train_ratio: f64,
    pub gbdt: GbdtConfig,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            train_ratio: 0.8,
            gbdt: GbdtConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionConfig {
    /// Leave a non-case unassigned when its top class probability is below this.
    pub min_probability: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizationConfig {
    /// Group comparisons averaged into the heterogeneity p-value column.
    pub comparison: Comparison,
}

/// Class whose F score is reported in the `f_score` column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FScoreClass {
    #[default]
    Majority,
    Delirium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub train_ratio: f64,
    pub f_score_class: FScoreClass,
    pub logistic: LogisticConfig,
    pub forest: ForestConfig,
    pub gbdt: GbdtConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            train_ratio: 0.8,
            f_score_class: FScoreClass::Majority,
            logistic: LogisticConfig::default(),
            forest: ForestConfig::default(),
            gbdt: GbdtConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub admissions: PathBuf,
    pub measurements: PathBuf,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub cohort: CohortSpec,
    pub clustering: ClusteringConfig,
    pub embedding: EmbeddingConfig,
    pub validation: ValidationConfig,
    pub expansion: ExpansionConfig,
    pub characterization: CharacterizationConfig,
    pub models: ModelConfig,
    pub write_plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: None,
            admissions: PathBuf::new(),
            measurements: PathBuf::new(),
            output_dir: PathBuf::new(),
            seed: None,
            threads: None,
            cohort: CohortSpec::default(),
            clustering: ClusteringConfig::default(),
            embedding: EmbeddingConfig::default(),
            validation: ValidationConfig::default(),
            expansion: ExpansionConfig::default(),
            characterization: CharacterizationConfig::default(),
            models: ModelConfig::default(),
            write_plots: true,
        }
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Layers the keys of a JSON object over `base`.
pub fn overlay<T: Serialize + DeserializeOwned>(base: T, doc: Value) -> Result<T> {
    if !doc.is_object() {
        return Err(Error::Config("config must be a JSON object".into()));
    }
    let mut value = serde_json::to_value(base)?;
    merge(&mut value, doc);
    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    pub fn desk() -> Self {
        RunConfig {
            preset: Some("desk".into()),
            ..RunConfig::default()
        }
    }

    /// Sampled silhouettes and embeddings keep the large cohort tractable.
    pub fn paper_scale() -> Self {
        let mut cfg = RunConfig {
            preset: Some("paper-scale".into()),
            ..RunConfig::default()
        };
        cfg.clustering.silhouette_sample = Some(3000);
        cfg.embedding.subsample = Some(3000);
        cfg.models.forest.n_trees = 100;
        cfg.models.gbdt.n_rounds = 200;
        cfg
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(RunConfig::desk()),
            "paper-scale" => Ok(RunConfig::paper_scale()),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected desk or paper-scale)"))),
        }
    }

    /// Parses a JSON config, layering its keys over the named preset.
    ///
    /// `preset_override` wins over a `preset` key in the document.
    pub fn from_json(text: &str, preset_override: Option<&str>) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        if !doc.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        let preset = preset_override
            .map(str::to_string)
            .or_else(|| doc.get("preset").and_then(Value::as_str).map(str::to_string));
        let base = match &preset {
            Some(p) => RunConfig::preset(p)?,
            None => RunConfig::default(),
        };
        let mut cfg = overlay(base, doc)?;
        if preset.is_some() {
            cfg.preset = preset;
        }
        Ok(cfg)
    }

    /// Checks every knob and that the inputs exist.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, p) in [("admissions", &self.admissions), ("measurements", &self.measurements)] {
            if p.as_os_str().is_empty() {
                problems.push(format!("{name} path is required"));
            } else if !p.is_file() {
                problems.push(format!("{name} file not found: {}", p.display()));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            problems.push("output_dir is required".into());
        }
        if self.seed.is_none() {
            problems.push("seed is required".into());
        }
        if self.threads == Some(0) {
            problems.push("threads must be at least 1".into());
        }
        if let Err(e) = self.cohort.validate() {
            problems.push(e.to_string());
        }
        let c = &self.clustering;
        if c.k_min < 2 || c.k_max < c.k_min {
            problems.push(format!("k range [{}, {}] is invalid", c.k_min, c.k_max));
        }
        if c.kmeans.restarts == 0 || c.kmeans.max_iter == 0 {
            problems.push("kmeans restarts and max_iter must be positive".into());
        }
        if c.metric == Metric::Cosine && c.linkage == Some(Linkage::Ward) {
            problems.push("ward linkage requires the euclidean metric".into());
        }
        if !(0.0..=1.0).contains(&c.kappa_threshold) {
            problems.push("kappa_threshold must lie in [0, 1]".into());
        }
        if matches!(c.silhouette_sample, Some(m) if m < c.k_max + 1) {
            problems.push("silhouette_sample must exceed k_max".into());
        }
        if self.embedding.enabled {
            let t = &self.embedding.tsne;
            if !(t.perplexity > 0.0) || t.iterations < 250 || !(t.learning_rate > 0.0) {
                problems.push("t-SNE needs positive perplexity and learning rate and at least 250 iterations".into());
            }
            if matches!(self.embedding.subsample, Some(m) if m < 10) {
                problems.push("embedding subsample must be at least 10".into());
            }
        }
        for (name, r) in [("validation", self.validation.train_ratio), ("models", self.models.train_ratio)] {
            if !(r > 0.0 && r < 1.0) {
                problems.push(format!("{name}.train_ratio must lie in (0, 1)"));
            }
        }
        if matches!(self.expansion.min_probability, Some(p) if !(0.0..=1.0).contains(&p)) {
            problems.push("expansion.min_probability must lie in [0, 1]".into());
        }
        if self.models.forest.n_trees == 0 {
            problems.push("forest needs at least one tree".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_overlays_preset() {
        let cfg = RunConfig::from_json(
            r#"{"preset":"paper-scale","seed":7,"clustering":{"k_max":6},"models":{"forest":{"n_trees":5}}}"#,
            None,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.clustering.k_max, 6);
        assert_eq!(cfg.clustering.silhouette_sample, Some(3000));
        assert_eq!(cfg.models.forest.n_trees, 5);
        assert_eq!(cfg.models.forest.max_depth, Some(8));
    }

    #[test]
    fn flag_preset_wins() {
        let cfg = RunConfig::from_json(r#"{"preset":"paper-scale"}"#, Some("desk")).unwrap();
        assert_eq!(cfg.preset.as_deref(), Some("desk"));
        assert_eq!(cfg.clustering.silhouette_sample, None);
    }

    #[test]
    fn missing_input_path_is_reported() {
        let cfg = RunConfig {
            seed: Some(1),
            output_dir: "out".into(),
            measurements: "/nonexistent/m.csv".into(),
            ..RunConfig::desk()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("admissions path is required"), "{msg}");
        assert!(msg.contains("/nonexistent/m.csv"), "{msg}");
    }

    #[test]
    fn unknown_key_and_bad_json_rejected() {
        assert!(RunConfig::from_json("[1]", None).is_err());
        assert!(RunConfig::from_json("{", None).is_err());
        assert!(RunConfig::from_json(r#"{"preset":"huge"}"#, None).is_err());
        assert!(RunConfig::from_json(r#"{"sed":1}"#, None).is_err());
    }
}
