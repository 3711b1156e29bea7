//! The analysis stages, each callable on its own.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::config::{ClusteringConfig, EmbeddingConfig, FScoreClass, ModelConfig, ValidationConfig};
use crate::cluster::{hierarchical, kmeans, select_k, KMeansModel, KProfile};
use crate::domain::{AdmissionRecord, AdmissionType, ClusterAssignment, FeatureMatrix, Gender, MatrixView, Method, Metric};
use crate::embed::{tsne, Embedding};
use crate::error::{Error, Result};
use crate::learn::{
    accuracy, argmax, auroc, ensemble_rank, f_score, macro_f, train_forest, train_gbdt, train_logreg,
    train_test_split, Classifier, GbdtModel, ImportanceRanking,
};
use crate::rng::{rng, stage_seed, substream};
use crate::stats::{
    agreement, chi_square, heterogeneity_summary, AgreementReport, ChiSquare, Comparison, HeterogeneityRow,
};

/// A t-SNE map of (a sample of) the case cohort under one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEmbedding {
    pub metric: Metric,
    /// Case row indices, in embedding order.
    pub rows: Vec<usize>,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub k: usize,
    pub kmeans_profile: KProfile,
    pub hierarchical_profile: Option<KProfile>,
    pub kmeans_model: KMeansModel,
    /// Primary subgroup labels, relabelled by descending size.
    pub kmeans: ClusterAssignment,
    /// Hierarchical labels aligned to the k-means labels.
    pub hierarchical: ClusterAssignment,
    pub agreement: AgreementReport,
    pub kappa: f64,
    pub unstable: bool,
    pub embeddings: Vec<MetricEmbedding>,
}

/// Chooses k, clusters with both methods, scores their agreement and embeds the cohort.
pub fn discover_subgroups(
    x: &FeatureMatrix,
    cfg: &ClusteringConfig,
    emb: &EmbeddingConfig,
    seed: u64,
) -> Result<Discovery> {
    let sk = cfg.select_k();
    let (k, kmeans_profile) = select_k(x, Method::Kmeans, cfg.metric, stage_seed(seed, "discover.select_k"), &sk)?;
    let hierarchical_profile = if cfg.profile_hierarchical {
        Some(select_k(x, Method::Hierarchical, cfg.metric, stage_seed(seed, "discover.select_k"), &sk)?.1)
    } else {
        None
    };
    let view = MatrixView::from(x);
    let (kmeans_model, mut km) = kmeans(view, k, cfg.metric, stage_seed(seed, "discover.kmeans"), &cfg.kmeans)?;
    km.canonicalize();
    let (_, hc) = hierarchical(view, k, cfg.metric, cfg.linkage)?;
    let (report, aligned) = agreement(&km, &hc)?;
    let kappa = report.kappa;

    let mut embeddings = Vec::new();
    if emb.enabled {
        let n = x.n_rows();
        let rows: Vec<usize> = match emb.subsample {
            Some(m) if m < n => {
                let mut r = sample(&mut rng(stage_seed(seed, "discover.tsne_sample")), n, m).into_vec();
                r.sort_unstable();
                r
            }
            _ => (0..n).collect(),
        };
        let sub = x.select_rows(&rows);
        for metric in [Metric::Euclidean, Metric::Cosine] {
            let mut t = emb.tsne.clone();
            t.metric = metric;
            t.seed = stage_seed(seed, &format!("discover.tsne.{metric}"));
            embeddings.push(MetricEmbedding {
                metric,
                rows: rows.clone(),
                embedding: tsne(MatrixView::from(&sub), &t)?,
            });
        }
    }
    Ok(Discovery {
        k,
        kmeans_profile,
        hierarchical_profile,
        kmeans_model,
        kmeans: km,
        hierarchical: aligned,
        agreement: report,
        kappa,
        unstable: kappa < cfg.kappa_threshold,
        embeddings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSetValidation {
    pub model: GbdtModel,
    pub accuracy: f64,
    pub macro_f: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Smallest cluster that a stratified 80:20 split can handle.
pub const MIN_CLUSTER_FOR_SPLIT: usize = 5;

/// Trains a multiclass GBDT to re-assign cases to their clusters and scores it on a held-out split.
pub fn validate_feature_set(
    x: &FeatureMatrix,
    assignment: &ClusterAssignment,
    cfg: &ValidationConfig,
    seed: u64,
) -> Result<FeatureSetValidation> {
    if let Some((c, n)) = assignment
        .sizes()
        .into_iter()
        .enumerate()
        .find(|&(_, n)| n < MIN_CLUSTER_FOR_SPLIT)
    {
        return Err(Error::invalid(format!(
            "cluster {c} has {n} members; at least {MIN_CLUSTER_FOR_SPLIT} are needed for a stratified split"
        )));
    }
    let y = &assignment.labels;
    let split = train_test_split(y, cfg.train_ratio, stage_seed(seed, "validate.split"), true)?;
    let train = x.select_rows(&split.train);
    let test = x.select_rows(&split.test);
    let y_train: Vec<usize> = split.train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<usize> = split.test.iter().map(|&i| y[i]).collect();
    let model = train_gbdt(MatrixView::from(&train), &y_train, assignment.k, &cfg.gbdt)?;
    let pred = model.predict(MatrixView::from(&test))?;
    Ok(FeatureSetValidation {
        accuracy: accuracy(&y_test, &pred),
        macro_f: macro_f(&y_test, &pred, assignment.k),
        n_train: split.train.len(),
        n_test: split.test.len(),
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    /// `None` when the top probability fell below the configured floor.
    pub labels: Vec<Option<usize>>,
    pub probabilities: Vec<f64>,
    pub histogram: Vec<usize>,
}

/// Assigns each non-case to its most probable subgroup.
pub fn expand_clusters(model: &impl Classifier, x: &FeatureMatrix, min_probability: Option<f64>) -> Result<Expansion> {
    let k = model.n_classes();
    if x.n_rows() == 0 {
        return Ok(Expansion {
            labels: Vec::new(),
            probabilities: Vec::new(),
            histogram: vec![0; k],
        });
    }
    let proba = model.predict_proba(MatrixView::from(x))?;
    let mut histogram = vec![0; k];
    let mut labels = Vec::with_capacity(proba.len());
    let mut probabilities = Vec::with_capacity(proba.len());
    for p in &proba {
        let c = argmax(p);
        let keep = min_probability.is_none_or(|m| p[c] >= m);
        if keep {
            histogram[c] += 1;
        }
        labels.push(keep.then_some(c));
        probabilities.push(p[c]);
    }
    Ok(Expansion {
        labels,
        probabilities,
        histogram,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub count: usize,
    pub percent: f64,
    pub los_mean: f64,
    pub los_sd: f64,
    pub age_mean: f64,
    pub age_sd: f64,
    pub female_pct: f64,
    pub mortality_pct: f64,
    pub emergency_pct: f64,
    pub ventilation_pct: f64,
    pub total_admissions_mean: f64,
    pub rank_order_mean: f64,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var.sqrt())
}

/// Summaries of a group of admissions; `total` is the size of the enclosing cohort.
pub fn outcome_summary(records: &[&AdmissionRecord], total: usize) -> OutcomeSummary {
    let n = records.len();
    let pct = |f: &dyn Fn(&AdmissionRecord) -> bool| 100.0 * records.iter().filter(|a| f(a)).count() as f64 / n as f64;
    let los: Vec<f64> = records.iter().map(|a| a.los_days()).collect();
    let age: Vec<f64> = records.iter().map(|a| a.age).collect();
    let (los_mean, los_sd) = mean_sd(&los);
    let (age_mean, age_sd) = mean_sd(&age);
    OutcomeSummary {
        count: n,
        percent: 100.0 * n as f64 / total as f64,
        los_mean,
        los_sd,
        age_mean,
        age_sd,
        female_pct: pct(&|a| a.gender == Gender::F),
        mortality_pct: pct(&|a| a.died_in_hospital),
        emergency_pct: pct(&|a| a.admission_type == AdmissionType::Emer),
        ventilation_pct: pct(&|a| a.ventilation),
        total_admissions_mean: records.iter().map(|a| a.total_admission_count as f64).sum::<f64>() / n as f64,
        rank_order_mean: records.iter().map(|a| a.admission_rank_order as f64).sum::<f64>() / n as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupProfile {
    pub subgroup: usize,
    pub outcomes: OutcomeSummary,
    /// Unstandardized means, one per feature column.
    pub feature_means: Vec<f64>,
}

/// Chi-square test of a categorical field across subgroups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalTest {
    pub field: String,
    /// `None` when fewer than two categories occur.
    pub result: Option<ChiSquare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub profiles: Vec<SubgroupProfile>,
    pub heterogeneity: Vec<HeterogeneityRow>,
    pub tests: Vec<CategoricalTest>,
}

fn categorical_test(field: &str, records: &[AdmissionRecord], labels: &[usize], k: usize, n_cat: usize, cat: impl Fn(&AdmissionRecord) -> usize) -> Result<CategoricalTest> {
    let mut table = vec![vec![0.0; n_cat]; k];
    for (a, &l) in records.iter().zip(labels) {
        table[l][cat(a)] += 1.0;
    }
    let used: Vec<usize> = (0..n_cat).filter(|&j| table.iter().any(|r| r[j] > 0.0)).collect();
    let table: Vec<Vec<f64>> = table
        .iter()
        .filter(|r| r.iter().any(|&v| v > 0.0))
        .map(|r| used.iter().map(|&j| r[j]).collect())
        .collect();
    let result = if used.len() < 2 || table.len() < 2 {
        None
    } else {
        Some(chi_square(&table)?)
    };
    Ok(CategoricalTest {
        field: field.to_string(),
        result,
    })
}

/// Per-subgroup profiles, feature heterogeneity and categorical tests.
///
/// `raw` supplies the unstandardized means, `z` the heterogeneity input.
pub fn characterize_subgroups(
    records: &[AdmissionRecord],
    raw: &FeatureMatrix,
    z: &FeatureMatrix,
    labels: &[usize],
    k: usize,
    comparison: Comparison,
) -> Result<Characterization> {
    if records.len() != labels.len() || raw.n_rows() != labels.len() || z.n_rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: records.len(),
        });
    }
    let n = labels.len();
    let d = raw.n_cols();
    let mut profiles = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        let recs: Vec<&AdmissionRecord> = members.iter().map(|&i| &records[i]).collect();
        let feature_means = (0..d)
            .map(|j| members.iter().map(|&i| raw.get(i, j)).sum::<f64>() / members.len() as f64)
            .collect();
        profiles.push(SubgroupProfile {
            subgroup: c,
            outcomes: outcome_summary(&recs, n),
            feature_means,
        });
    }
    let heterogeneity = heterogeneity_summary(z, labels, k, comparison)?;
    let tests = vec![
        categorical_test("gender", records, labels, k, 2, |a| (a.gender == Gender::F) as usize)?,
        categorical_test("admission_type", records, labels, k, 4, |a| {
            AdmissionType::ALL.iter().position(|t| *t == a.admission_type).unwrap()
        })?,
        categorical_test("ventilation", records, labels, k, 2, |a| a.ventilation as usize)?,
        categorical_test("mortality", records, labels, k, 2, |a| a.died_in_hospital as usize)?,
    ];
    Ok(Characterization {
        profiles,
        heterogeneity,
        tests,
    })
}

pub const MODEL_NAMES: [&str; 3] = ["LR", "RF", "GBDT"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    /// F of the configured class.
    pub f_score: f64,
    pub f_delirium: f64,
    pub f_non_delirium: f64,
    pub f_macro: f64,
    pub auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeReport {
    /// `all` or `subgroup_<n>` with n starting at 1.
    pub scope: String,
    pub subgroup: Option<usize>,
    pub n_delirium: usize,
    pub n_non_delirium: usize,
    pub delirium_pct: f64,
    pub scores: Vec<ModelScore>,
    pub importance: ImportanceRanking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupModelReport {
    pub feature_ids: Vec<String>,
    pub scopes: Vec<ScopeReport>,
    pub warnings: Vec<String>,
}

impl SubgroupModelReport {
    pub fn scope(&self, name: &str) -> Option<&ScopeReport> {
        self.scopes.iter().find(|s| s.scope == name)
    }
}

pub fn scope_name(subgroup: Option<usize>) -> String {
    match subgroup {
        None => "all".into(),
        Some(c) => format!("subgroup_{}", c + 1),
    }
}

fn fit_scope(x: &FeatureMatrix, y: &[usize], cfg: &ModelConfig, seed: u64) -> Result<(Vec<ModelScore>, ImportanceRanking)> {
    let split = train_test_split(y, cfg.train_ratio, substream(seed, 0), true)?;
    let train = x.select_rows(&split.train);
    let test = x.select_rows(&split.test);
    let y_train: Vec<usize> = split.train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<usize> = split.test.iter().map(|&i| y[i]).collect();
    if y_test.iter().all(|&v| v == y_test[0]) || y_train.iter().all(|&v| v == y_train[0]) {
        return Err(Error::invalid("train or test split holds a single outcome class"));
    }
    let (tv, sv) = (MatrixView::from(&train), MatrixView::from(&test));
    let lr = train_logreg(tv, &y_train, &cfg.logistic)?;
    let mut fc = cfg.forest.clone();
    fc.seed = substream(seed, 1);
    let rf = train_forest(tv, &y_train, 2, &fc)?;
    let gb = train_gbdt(tv, &y_train, 2, &cfg.gbdt)?;
    let models: [&dyn Classifier; 3] = [&lr, &rf, &gb];
    let positives = y.iter().filter(|&&v| v == 1).count();
    let f_class = match cfg.f_score_class {
        FScoreClass::Delirium => 1,
        FScoreClass::Majority => usize::from(2 * positives > y.len()),
    };
    let mut scores = Vec::new();
    let mut importances = Vec::new();
    for (name, m) in MODEL_NAMES.iter().zip(models) {
        let proba = m.predict_proba(sv)?;
        let pred: Vec<usize> = proba.iter().map(|p| argmax(p)).collect();
        let p1: Vec<f64> = proba.iter().map(|p| p[1]).collect();
        scores.push(ModelScore {
            model: name.to_string(),
            f_score: f_score(&y_test, &pred, f_class),
            f_delirium: f_score(&y_test, &pred, 1),
            f_non_delirium: f_score(&y_test, &pred, 0),
            f_macro: macro_f(&y_test, &pred, 2),
            auroc: auroc(&y_test, &p1)?,
        });
        importances.push(m.feature_importance());
    }
    Ok((scores, ensemble_rank(&importances)?))
}

/// Fits LR, RF and GBDT delirium models for the whole cohort and each subgroup.
///
/// `y[i]` is 1 for delirium. Rows with `subgroup[i] == None` only enter the
/// `all` scope. Scopes whose outcome is single-class are skipped with a warning.
pub fn train_subgroup_models(
    x: &FeatureMatrix,
    y: &[usize],
    subgroup: &[Option<usize>],
    k: usize,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<SubgroupModelReport> {
    if y.len() != x.n_rows() || subgroup.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: y.len().min(subgroup.len()),
        });
    }
    let mut scopes = Vec::new();
    let mut warnings = Vec::new();
    let base = stage_seed(seed, "models");
    for (s, scope) in std::iter::once(None).chain((0..k).map(Some)).enumerate() {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| scope.is_none() || subgroup[i] == scope).collect();
        let ys: Vec<usize> = rows.iter().map(|&i| y[i]).collect();
        let n_delirium = ys.iter().filter(|&&v| v == 1).count();
        let name = scope_name(scope);
        if n_delirium == 0 || n_delirium == ys.len() {
            warnings.push(format!("{name}: outcome has a single class; scope skipped"));
            continue;
        }
        match fit_scope(&x.select_rows(&rows), &ys, cfg, substream(base, s as u64)) {
            Ok((scores, importance)) => scopes.push(ScopeReport {
                scope: name,
                subgroup: scope,
                n_delirium,
                n_non_delirium: ys.len() - n_delirium,
                delirium_pct: 100.0 * n_delirium as f64 / ys.len() as f64,
                scores,
                importance,
            }),
            Err(Error::InvalidArgument(msg)) if msg.contains("single outcome class") || msg.contains("two classes") => {
                warnings.push(format!("{name}: {msg}; scope skipped"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SubgroupModelReport {
        feature_ids: x.column_ids.clone(),
        scopes,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(n_per: usize, k: usize, d: usize, sep: f64, seed: u64) -> (FeatureMatrix, Vec<usize>) {
        let mut r = rng(seed);
        let mut values = Vec::new();
        let mut truth = Vec::new();
        for c in 0..k {
            for _ in 0..n_per {
                for j in 0..d {
                    let center = if j % k == c { sep } else { 0.0 };
                    let e: f64 = StandardNormal.sample(&mut r);
                    values.push(center + e);
                }
                truth.push(c);
            }
        }
        let n = n_per * k;
        let m = FeatureMatrix::new(
            (0..n).map(|i| format!("r{i}")).collect(),
            (0..d).map(|j| format!("f{j}")).collect(),
            values,
        )
        .unwrap();
        (m, truth)
    }

    fn assignment(labels: Vec<usize>, k: usize) -> ClusterAssignment {
        ClusterAssignment {
            labels,
            k,
            method: Method::Kmeans,
            metric: Metric::Euclidean,
            objective: 0.0,
        }
    }

    fn no_embedding() -> EmbeddingConfig {
        EmbeddingConfig {
            enabled: false,
            ..EmbeddingConfig::default()
        }
    }

    #[test]
    fn discovery_recovers_blobs() {
        let (x, _) = blobs(60, 3, 8, 8.0, 1);
        let cfg = ClusteringConfig {
            k_max: 6,
            ..ClusteringConfig::default()
        };
        let d = discover_subgroups(&x, &cfg, &no_embedding(), 5).unwrap();
        assert_eq!(d.k, 3);
        assert!(d.kappa > 0.95);
        assert!(!d.unstable);
        assert_eq!(d.kmeans.labels.len(), 180);
        assert!(d.embeddings.is_empty());
    }

    #[test]
    fn discovery_flags_structureless_data() {
        let (x, _) = blobs(300, 1, 20, 0.0, 2);
        let cfg = ClusteringConfig {
            k_max: 6,
            silhouette_sample: Some(200),
            ..ClusteringConfig::default()
        };
        let d = discover_subgroups(&x, &cfg, &no_embedding(), 5).unwrap();
        assert!(d.unstable, "kappa {}", d.kappa);
    }

    #[test]
    fn embeddings_cover_both_metrics() {
        let (x, _) = blobs(20, 2, 4, 6.0, 3);
        let emb = EmbeddingConfig {
            enabled: true,
            subsample: Some(30),
            tsne: crate::embed::TsneConfig {
                perplexity: 5.0,
                iterations: 250,
                ..Default::default()
            },
        };
        let cfg = ClusteringConfig {
            k_max: 4,
            ..ClusteringConfig::default()
        };
        let d = discover_subgroups(&x, &cfg, &emb, 1).unwrap();
        assert_eq!(d.embeddings.len(), 2);
        assert_eq!(d.embeddings[0].rows.len(), 30);
        assert_eq!(d.embeddings[1].metric, Metric::Cosine);
    }

    #[test]
    fn validation_separable_and_null() {
        let (x, truth) = blobs(50, 3, 6, 6.0, 4);
        let cfg = ValidationConfig {
            gbdt: small_gbdt(),
            ..ValidationConfig::default()
        };
        let v = validate_feature_set(&x, &assignment(truth.clone(), 3), &cfg, 9).unwrap();
        assert!(v.accuracy >= 0.95, "{}", v.accuracy);
        assert!(v.model.predict(MatrixView::from(&x)).unwrap().iter().all(|&l| l < 3));

        // shuffled labels carry no signal: accuracy near the largest class prior
        let mut r = rng(11);
        let shuffled: Vec<usize> = (0..150).map(|_| usize::from(r.random::<f64>() < 0.3)).collect();
        let prior = shuffled.iter().filter(|&&l| l == 0).count() as f64 / 150.0;
        let mut accs = Vec::new();
        for s in 0..5 {
            accs.push(validate_feature_set(&x, &assignment(shuffled.clone(), 2), &cfg, s).unwrap().accuracy);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((mean - prior).abs() <= 0.1, "mean {mean} prior {prior}");
    }

    fn small_gbdt() -> crate::learn::GbdtConfig {
        crate::learn::GbdtConfig {
            n_rounds: 40,
            ..Default::default()
        }
    }

    #[test]
    fn tiny_cluster_cannot_be_validated() {
        let (x, _) = blobs(10, 2, 3, 5.0, 4);
        let mut labels = vec![0; 20];
        labels[0] = 1;
        labels[1] = 1;
        let err = validate_feature_set(&x, &assignment(labels, 2), &ValidationConfig::default(), 1).unwrap_err();
        assert!(err.to_string().contains("cluster 1 has 2 members"));
    }

    #[test]
    fn expansion_follows_centroids() {
        let (x, truth) = blobs(40, 3, 6, 6.0, 7);
        let cfg = ValidationConfig {
            gbdt: small_gbdt(),
            ..ValidationConfig::default()
        };
        let v = validate_feature_set(&x, &assignment(truth.clone(), 3), &cfg, 1).unwrap();
        // rows duplicated from each cluster centroid
        let d = 6;
        let mut values = Vec::new();
        for c in 0..3 {
            for j in 0..d {
                let rows: Vec<usize> = (0..120).filter(|&i| truth[i] == c).collect();
                values.push(rows.iter().map(|&i| x.get(i, j)).sum::<f64>() / rows.len() as f64);
            }
        }
        let centroids = FeatureMatrix::new(vec!["a".into(), "b".into(), "c".into()], x.column_ids.clone(), values).unwrap();
        let e = expand_clusters(&v.model, &centroids, None).unwrap();
        assert_eq!(e.labels, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(e.histogram, vec![1, 1, 1]);

        let strict = expand_clusters(&v.model, &centroids, Some(1.0)).unwrap();
        assert!(strict.labels.iter().all(Option::is_none));

        let empty = x.select_rows(&[]);
        let e = expand_clusters(&v.model, &empty, None).unwrap();
        assert!(e.labels.is_empty());
        assert_eq!(e.histogram, vec![0; 3]);
    }

    #[test]
    fn subgroup_models_cover_every_scope() {
        let mut r = rng(3);
        let n = 400;
        let d = 6;
        let subgroup: Vec<Option<usize>> = (0..n).map(|i| Some(i % 2)).collect();
        let mut values = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
            // feature 0 drives the outcome in subgroup 0 only
            let z = if i % 2 == 0 { 2.5 * row[0] } else { 0.0 } - 1.0;
            y.push(usize::from(r.random::<f64>() < 1.0 / (1.0 + (-z as f64).exp())));
            values.extend(row);
        }
        let x = FeatureMatrix::new(
            (0..n).map(|i| format!("r{i}")).collect(),
            (0..d).map(|j| format!("f{j}")).collect(),
            values,
        )
        .unwrap();
        let cfg = ModelConfig {
            forest: crate::learn::ForestConfig {
                n_trees: 30,
                ..Default::default()
            },
            gbdt: small_gbdt(),
            ..ModelConfig::default()
        };
        let rep = train_subgroup_models(&x, &y, &subgroup, 2, &cfg, 1).unwrap();
        assert_eq!(rep.scopes.len(), 3);
        let s0 = rep.scope("subgroup_1").unwrap();
        let top = (0..d).max_by(|&a, &b| s0.importance.mean_rank[a].total_cmp(&s0.importance.mean_rank[b])).unwrap();
        assert_eq!(top, 0);
        for s in &rep.scopes {
            let total = (s.n_delirium + s.n_non_delirium) as f64;
            assert!((s.delirium_pct - 100.0 * s.n_delirium as f64 / total).abs() < 1e-9);
            assert_eq!(s.scores.len(), 3);
        }
        assert_eq!(rep, train_subgroup_models(&x, &y, &subgroup, 2, &cfg, 1).unwrap());

        // a subgroup with only one outcome class is skipped
        let y2: Vec<usize> = (0..n).map(|i| if i % 2 == 1 { 0 } else { y[i] }).collect();
        let rep = train_subgroup_models(&x, &y2, &subgroup, 2, &cfg, 1).unwrap();
        assert!(rep.scope("subgroup_2").is_none());
        assert!(rep.warnings.iter().any(|w| w.starts_with("subgroup_2")));
    }
}
