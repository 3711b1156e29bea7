//! Plots and text tables rendered from a report bundle.

pub mod svg;

use std::fmt::Write;
use std::fs;
use std::path::Path;

use crate::domain::feature_catalog;
use crate::error::{Error, Result};
use crate::pipeline::{ReportBundle, BUNDLE_FILES, MODEL_NAMES};
use svg::{heatmap, line_chart, scatter_grid, Panel};

fn save(dir: &Path, name: &str, text: String) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Writes `silhouette.svg`, `tsne.svg`, `agreement.svg` and `importance.svg`.
pub fn write_plots(b: &ReportBundle) -> Result<()> {
    let d = &b.discovery;
    let mut series = vec![(
        "k-means".to_string(),
        d.kmeans_profile.entries.iter().map(|&(k, w)| (k as f64, w)).collect(),
    )];
    if let Some(p) = &d.hierarchical_profile {
        series.push(("hierarchical".into(), p.entries.iter().map(|&(k, w)| (k as f64, w)).collect()));
    }
    save(&b.dir, "silhouette.svg", line_chart("Mean silhouette width by k", "k", "mean silhouette", &series))?;

    let mut panels = Vec::new();
    for e in &d.embeddings {
        for (method, labels) in [("k-means", &d.kmeans.labels), ("hierarchical", &d.hierarchical.labels)] {
            panels.push(Panel {
                title: format!("{} distance, {method} subgroups", e.metric),
                points: (0..e.rows.len()).map(|j| e.embedding.point(j)).collect(),
                labels: e.rows.iter().map(|&i| labels[i]).collect(),
            });
        }
    }
    save(&b.dir, "tsne.svg", scatter_grid("t-SNE of the case cohort", &panels, 2))?;

    let k = d.k;
    let rows: Vec<String> = (1..=k).map(|c| format!("k-means {c}")).collect();
    let cols: Vec<String> = (1..=k).map(|c| format!("hier. {c}")).collect();
    save(
        &b.dir,
        "agreement.svg",
        heatmap(
            &format!("Cluster agreement (% of k-means row), kappa {:.3}", d.kappa),
            &rows,
            &cols,
            &d.agreement.row_percent,
            true,
        ),
    )?;

    let catalog = feature_catalog();
    let m = &b.models;
    let rows: Vec<String> = m.feature_ids.iter().map(|id| catalog.display_name(id).to_string()).collect();
    let cols: Vec<String> = m.scopes.iter().map(|s| s.scope.clone()).collect();
    let values: Vec<Vec<f64>> = (0..m.feature_ids.len())
        .map(|j| m.scopes.iter().map(|s| s.importance.mean_rank[j]).collect())
        .collect();
    save(
        &b.dir,
        "importance.svg",
        heatmap("Ensemble mean importance rank (higher is more important)", &rows, &cols, &values, false),
    )?;
    Ok(())
}

/// Bundle artifacts absent from `dir`.
pub fn missing_artifacts(dir: &Path) -> Vec<String> {
    BUNDLE_FILES
        .iter()
        .filter(|f| !dir.join(f).is_file())
        .map(|f| f.to_string())
        .collect()
}

/// A rendered text table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn render(&self) -> String {
        let n = self.header.len();
        let mut width = vec![0; n];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (j, c) in r.iter().enumerate() {
                width[j] = width[j].max(c.chars().count());
            }
        }
        let line = |r: &Vec<String>| {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(j, c)| if j == 0 { format!("{c:<w$}", w = width[j]) } else { format!("{c:>w$}", w = width[j]) })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out, "{}", line(&self.header));
        let _ = writeln!(out, "{}", "-".repeat(width.iter().sum::<usize>() + 2 * (n.saturating_sub(1))));
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(r));
        }
        out
    }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::invalid(format!("{}: {other:?}", path.display())),
        })?;
        let header = rdr.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for r in rdr.records() {
            rows.push(r?.iter().map(String::from).collect());
        }
        Ok(Csv { header, rows })
    }

    fn col(&self, name: &str, path: &Path) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Schema {
            path: path.to_path_buf(),
            expected: format!("a `{name}` column"),
            found: self.header.join(","),
        })
    }
}

fn fixed(s: &str, digits: usize) -> String {
    match s.parse::<f64>() {
        Ok(v) => format!("{v:.digits$}"),
        Err(_) => s.to_string(),
    }
}

/// Fields of the outcome summaries, as `(column, label, digits)`.
const OUTCOME_ROWS: [(&str, &str, usize); 12] = [
    ("count", "Patients", 0),
    ("percent", "Percent of cohort", 1),
    ("los_mean", "LOS, days (mean)", 2),
    ("los_sd", "LOS, days (sd)", 2),
    ("age_mean", "Age (mean)", 1),
    ("age_sd", "Age (sd)", 1),
    ("female_pct", "Female %", 1),
    ("mortality_pct", "In-hospital mortality %", 1),
    ("emergency_pct", "Emergency admission %", 1),
    ("ventilation_pct", "Ventilation %", 1),
    ("total_admissions_mean", "Total admissions (mean)", 2),
    ("rank_order_mean", "Admission rank order (mean)", 2),
];

/// Transposes CSV rows into a table with one column per CSV row.
fn transposed(title: &str, csv: &Csv, path: &Path, key: &str, key_fmt: impl Fn(&str) -> String, extra: &[String]) -> Result<Table> {
    let kc = csv.col(key, path)?;
    let mut header = vec![String::new()];
    header.extend(csv.rows.iter().map(|r| key_fmt(&r[kc])));
    let mut rows = Vec::new();
    for (col, label, digits) in OUTCOME_ROWS {
        let c = csv.col(col, path)?;
        let mut row = vec![label.to_string()];
        row.extend(csv.rows.iter().map(|r| fixed(&r[c], digits)));
        rows.push(row);
    }
    let catalog = feature_catalog();
    for id in extra {
        let c = csv.col(id, path)?;
        let mut row = vec![catalog.display_name(id).to_string()];
        row.extend(csv.rows.iter().map(|r| fixed(&r[c], 2)));
        rows.push(row);
    }
    Ok(Table {
        title: title.to_string(),
        header,
        rows,
    })
}

/// Demographics, subgroup characteristics and model performance tables,
/// read from the bundle CSVs.
pub fn bundle_tables(dir: &Path) -> Result<Vec<Table>> {
    let missing = missing_artifacts(dir);
    if !missing.is_empty() {
        return Err(Error::IncompleteBundle(missing));
    }
    let p = dir.join("demographics.csv");
    let demo = transposed(
        "Demographics and outcomes",
        &Csv::read(&p)?,
        &p,
        "group",
        |g| g.replace('_', "-"),
        &[],
    )?;
    let p = dir.join("subgroup_profiles.csv");
    let prof = transposed(
        "Subgroup physiological characteristics",
        &Csv::read(&p)?,
        &p,
        "subgroup",
        |s| format!("Subgroup {s}"),
        &feature_catalog().physio_columns(),
    )?;

    let p = dir.join("model_metrics.csv");
    let m = Csv::read(&p)?;
    let [sc, nd, nn, dp, mc, fc, ac] = ["scope", "n_delirium", "n_non_delirium", "delirium_pct", "model", "f_score", "auroc"]
        .map(|c| m.col(c, &p));
    let (sc, nd, nn, dp, mc, fc, ac) = (sc?, nd?, nn?, dp?, mc?, fc?, ac?);
    let mut scopes: Vec<String> = Vec::new();
    for r in &m.rows {
        if !scopes.contains(&r[sc]) {
            scopes.push(r[sc].clone());
        }
    }
    let cell = |scope: &str, model: Option<&str>, c: usize, digits: usize| {
        m.rows
            .iter()
            .find(|r| r[sc] == scope && model.is_none_or(|x| r[mc] == x))
            .map_or(String::new(), |r| fixed(&r[c], digits))
    };
    let mut rows = Vec::new();
    for (label, c, digits) in [("Delirium patients", nd, 0), ("Non-delirium patients", nn, 0), ("Delirium %", dp, 1)] {
        let mut row = vec![label.to_string()];
        row.extend(scopes.iter().map(|s| cell(s, None, c, digits)));
        rows.push(row);
    }
    for (metric, c) in [("F score", fc), ("AUC", ac)] {
        for model in MODEL_NAMES {
            let mut row = vec![format!("{metric}: {model}")];
            row.extend(scopes.iter().map(|s| cell(s, Some(model), c, 3)));
            rows.push(row);
        }
    }
    let mut header = vec![String::new()];
    header.extend(scopes.iter().map(|s| match s.strip_prefix("subgroup_") {
        Some(n) => format!("Subgroup {n}"),
        None => "All".to_string(),
    }));
    let models = Table {
        title: "Subgroup counts and predictive model performance".into(),
        header,
        rows,
    };
    Ok(vec![demo, prof, models])
}
