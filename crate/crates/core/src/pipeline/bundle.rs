//! Writes a [`ReportBundle`] to disk.

use std::fs;
use std::path::Path;

use super::ReportBundle;
use crate::domain::{feature_catalog, Method};
use crate::error::{Error, Result};
use crate::report;

/// Data artifacts, always written.
pub const BUNDLE_FILES: [&str; 12] = [
    "assignments.csv",
    "silhouette.csv",
    "kappa.json",
    "agreement.csv",
    "embedding.csv",
    "subgroup_profiles.csv",
    "heterogeneity.csv",
    "model_metrics.csv",
    "importance_ranks.csv",
    "demographics.csv",
    "subgroup_tests.csv",
    "run_manifest.json",
];

pub const PLOT_FILES: [&str; 4] = ["silhouette.svg", "tsne.svg", "agreement.svg", "importance.svg"];

fn num(v: f64) -> String {
    v.to_string()
}

fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let path = dir.join(name);
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

const OUTCOME_COLUMNS: [&str; 12] = [
    "count",
    "percent",
    "los_mean",
    "los_sd",
    "age_mean",
    "age_sd",
    "female_pct",
    "mortality_pct",
    "emergency_pct",
    "ventilation_pct",
    "total_admissions_mean",
    "rank_order_mean",
];

fn outcome_cells(o: &super::OutcomeSummary) -> Vec<String> {
    let mut v = vec![o.count.to_string()];
    v.extend(
        [
            o.percent,
            o.los_mean,
            o.los_sd,
            o.age_mean,
            o.age_sd,
            o.female_pct,
            o.mortality_pct,
            o.emergency_pct,
            o.ventilation_pct,
            o.total_admissions_mean,
            o.rank_order_mean,
        ]
        .map(num),
    );
    v
}

/// Writes every data artifact and, when asked, the four plots.
pub fn write_bundle(b: &ReportBundle, plots: bool) -> Result<()> {
    let dir = b.dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let catalog = feature_catalog();
    let d = &b.discovery;
    let f = &b.features;
    let k = d.k;
    let metric = d.kmeans.metric.to_string();

    // assignments, merged in admission-id order
    let mut rows: Vec<Vec<String>> = f
        .cases
        .iter()
        .enumerate()
        .map(|(i, a)| {
            vec![
                a.admission_id.clone(),
                "1".into(),
                metric.clone(),
                (d.kmeans.labels[i] + 1).to_string(),
                (d.hierarchical.labels[i] + 1).to_string(),
                String::new(),
            ]
        })
        .chain(f.noncases.iter().enumerate().map(|(i, a)| {
            vec![
                a.admission_id.clone(),
                "0".into(),
                metric.clone(),
                b.expansion.labels[i].map_or(String::new(), |l| (l + 1).to_string()),
                String::new(),
                num(b.expansion.probabilities[i]),
            ]
        }))
        .collect();
    rows.sort_by(|x, y| x[0].cmp(&y[0]));
    write_csv(
        dir,
        "assignments.csv",
        &strings(&["admission_id", "is_case", "metric", "subgroup", "hierarchical_subgroup", "expansion_probability"]),
        &rows,
    )?;

    let mut rows = Vec::new();
    for (method, profile) in [(Method::Kmeans, Some(&d.kmeans_profile)), (Method::Hierarchical, d.hierarchical_profile.as_ref())] {
        for (kk, w) in profile.map_or(&[][..], |p| p.entries.as_slice()) {
            let selected = method == Method::Kmeans && *kk == k;
            rows.push(vec![method.to_string(), metric.clone(), kk.to_string(), num(*w), u8::from(selected).to_string()]);
        }
    }
    write_csv(dir, "silhouette.csv", &strings(&["method", "metric", "k", "mean_width", "selected"]), &rows)?;

    write_json(
        dir,
        "kappa.json",
        &serde_json::json!({
            "k": k,
            "metric": metric,
            "kappa": d.kappa,
            "threshold": b.manifest.config.clustering.kappa_threshold,
            "unstable": d.unstable,
            "alignment": d.agreement.alignment,
        }),
    )?;

    let mut rows = Vec::new();
    for a in 0..k {
        for h in 0..k {
            rows.push(vec![
                metric.clone(),
                (a + 1).to_string(),
                (h + 1).to_string(),
                d.agreement.confusion[a][h].to_string(),
                num(d.agreement.row_percent[a][h]),
            ]);
        }
    }
    write_csv(
        dir,
        "agreement.csv",
        &strings(&["metric", "kmeans_subgroup", "hierarchical_subgroup", "count", "row_percent"]),
        &rows,
    )?;

    let mut rows = Vec::new();
    for e in &d.embeddings {
        for (j, &i) in e.rows.iter().enumerate() {
            let [x, y] = e.embedding.point(j);
            rows.push(vec![
                f.cases[i].admission_id.clone(),
                e.metric.to_string(),
                num(x),
                num(y),
                (d.kmeans.labels[i] + 1).to_string(),
                (d.hierarchical.labels[i] + 1).to_string(),
            ]);
        }
    }
    write_csv(
        dir,
        "embedding.csv",
        &strings(&["admission_id", "metric", "x", "y", "kmeans_subgroup", "hierarchical_subgroup"]),
        &rows,
    )?;

    let physio = catalog.physio_columns();
    let mut header = strings(&["subgroup", "metric"]);
    header.extend(strings(&OUTCOME_COLUMNS));
    header.extend(physio.iter().cloned());
    let rows: Vec<Vec<String>> = b
        .characterization
        .profiles
        .iter()
        .map(|p| {
            let mut r = vec![(p.subgroup + 1).to_string(), metric.clone()];
            r.extend(outcome_cells(&p.outcomes));
            r.extend(p.feature_means.iter().map(|&v| num(v)));
            r
        })
        .collect();
    write_csv(dir, "subgroup_profiles.csv", &header, &rows)?;

    let mut header = strings(&["feature", "display_name", "metric"]);
    header.extend((1..=k).map(|c| format!("mean_subgroup_{c}")));
    header.extend(strings(&["std_of_means", "avg_neglog10_p", "highlighted"]));
    let rows: Vec<Vec<String>> = b
        .characterization
        .heterogeneity
        .iter()
        .map(|h| {
            let mut r = vec![h.feature.clone(), catalog.display_name(&h.feature).to_string(), metric.clone()];
            r.extend(h.subgroup_means.iter().map(|&v| num(v)));
            r.extend([num(h.std_of_means), num(h.avg_neglog10_p), u8::from(h.highlighted).to_string()]);
            r
        })
        .collect();
    write_csv(dir, "heterogeneity.csv", &header, &rows)?;

    let mut rows = Vec::new();
    for s in &b.models.scopes {
        for m in &s.scores {
            rows.push(vec![
                s.scope.clone(),
                metric.clone(),
                s.n_delirium.to_string(),
                s.n_non_delirium.to_string(),
                num(s.delirium_pct),
                m.model.clone(),
                num(m.f_score),
                num(m.f_delirium),
                num(m.f_non_delirium),
                num(m.f_macro),
                num(m.auroc),
            ]);
        }
    }
    write_csv(
        dir,
        "model_metrics.csv",
        &strings(&[
            "scope",
            "metric",
            "n_delirium",
            "n_non_delirium",
            "delirium_pct",
            "model",
            "f_score",
            "f_delirium",
            "f_non_delirium",
            "f_macro",
            "auroc",
        ]),
        &rows,
    )?;

    let mut header = strings(&["feature", "display_name", "metric"]);
    header.extend(b.models.scopes.iter().map(|s| s.scope.clone()));
    let rows: Vec<Vec<String>> = b
        .models
        .feature_ids
        .iter()
        .enumerate()
        .map(|(j, id)| {
            let mut r = vec![id.clone(), catalog.display_name(id).to_string(), metric.clone()];
            r.extend(b.models.scopes.iter().map(|s| num(s.importance.mean_rank[j])));
            r
        })
        .collect();
    write_csv(dir, "importance_ranks.csv", &header, &rows)?;

    let mut header = vec!["group".to_string()];
    header.extend(strings(&OUTCOME_COLUMNS));
    let rows: Vec<Vec<String>> = b
        .demographics
        .iter()
        .map(|(g, o)| {
            let mut r = vec![g.clone()];
            r.extend(outcome_cells(o));
            r
        })
        .collect();
    write_csv(dir, "demographics.csv", &header, &rows)?;

    let rows: Vec<Vec<String>> = b
        .characterization
        .tests
        .iter()
        .map(|t| match &t.result {
            Some(c) => vec![t.field.clone(), metric.clone(), num(c.statistic), c.df.to_string(), num(c.p_value)],
            None => vec![t.field.clone(), metric.clone(), String::new(), String::new(), String::new()],
        })
        .collect();
    write_csv(dir, "subgroup_tests.csv", &strings(&["field", "metric", "statistic", "df", "p_value"]), &rows)?;

    write_json(dir, "run_manifest.json", &b.manifest)?;

    if plots {
        report::write_plots(b)?;
    }
    Ok(())
}
