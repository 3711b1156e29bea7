use std::path::Path;
use std::process::{Command, Output};

use subpheno::pipeline::{BUNDLE_FILES, PLOT_FILES};
use subpheno::report::bundle_tables;

const SMALL_SYNTH: &str = r#"{"n_cases": 400, "n_noncases": 2000, "n_decoys": 20}"#;
const SMALL_RUN: &str = r#"{"embedding": {"subsample": 200, "tsne": {"iterations": 250}}}"#;

fn subpheno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subpheno")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn synth_small(dir: &Path, seed: &str) -> String {
    let cfg = write(dir, "synth.json", SMALL_SYNTH);
    let data = dir.join(format!("data_{seed}"));
    let o = subpheno(&["synth", "--config", &cfg, "--seed", seed, "--out", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    data.to_str().unwrap().to_string()
}

fn run_small(dir: &Path, data: &str, out: &str) -> Output {
    let cfg = write(dir, "run.json", SMALL_RUN);
    subpheno(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "9",
        "--admissions",
        &format!("{data}/admissions.csv"),
        "--measurements",
        &format!("{data}/measurements.csv"),
        "--out",
        out,
    ])
}

#[test]
fn synth_writes_three_files_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_small(dir.path(), "4");
    let cfg = write(dir.path(), "synth.json", SMALL_SYNTH);
    let b = dir.path().join("again");
    let o = subpheno(&["synth", "--config", &cfg, "--seed", "4", "--out", b.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("self-check"));
    for f in ["admissions.csv", "measurements.csv", "ground_truth.csv"] {
        let x = std::fs::read(Path::new(&a).join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f} differs between identical runs");
    }
}

#[test]
fn invalid_synth_spec_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"missing_rate": 1.2}"#);
    let out = dir.path().join("never");
    let o = subpheno(&["synth", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing_rate"));
    assert!(!out.exists());
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent_admissions.csv");
    let o = subpheno(&[
        "run",
        "--seed",
        "1",
        "--admissions",
        missing.to_str().unwrap(),
        "--measurements",
        missing.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent_admissions.csv"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(subpheno(&["run", "--frobnicate"]).status.code(), Some(2));
}

#[test]
fn dry_run_validates_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_small(dir.path(), "2");
    let out = dir.path().join("out");
    let o = subpheno(&[
        "run",
        "--dry-run",
        "--seed",
        "1",
        "--admissions",
        &format!("{data}/admissions.csv"),
        "--measurements",
        &format!("{data}/measurements.csv"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.exists());

    let no_seed = subpheno(&[
        "run",
        "--dry-run",
        "--admissions",
        &format!("{data}/admissions.csv"),
        "--measurements",
        &format!("{data}/measurements.csv"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(no_seed.status.code(), Some(2));
    assert!(stderr(&no_seed).contains("seed"));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_small(dir.path(), "3");
    let out = dir.path().join("bundle");
    let o = run_small(dir.path(), &data, out.to_str().unwrap());
    assert!(o.status.success(), "{}", stderr(&o));

    for f in BUNDLE_FILES.iter().chain(PLOT_FILES.iter()) {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    for f in PLOT_FILES {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(text.len() < 5 * 1024 * 1024);
        roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{f} is not well-formed: {e}"));
    }

    let r = subpheno(&["report", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", stderr(&r));
    let tables = bundle_tables(&out).unwrap();
    assert_eq!(tables.len(), 3);
    // tables are transposed: one column per CSV group
    let column = |name: &str, field: &str| -> Vec<String> {
        let mut r = csv::Reader::from_path(out.join(name)).unwrap();
        let i = r.headers().unwrap().iter().position(|h| h == field).unwrap();
        let mut seen: Vec<String> = Vec::new();
        for rec in r.records() {
            let v = rec.unwrap()[i].to_string();
            if !seen.contains(&v) {
                seen.push(v);
            }
        }
        seen
    };
    assert_eq!(tables[0].header.len() - 1, column("demographics.csv", "group").len());
    assert_eq!(tables[1].header.len() - 1, column("subgroup_profiles.csv", "subgroup").len());
    assert_eq!(tables[2].header.len() - 1, column("model_metrics.csv", "scope").len());
    let printed = String::from_utf8_lossy(&r.stdout);
    for t in &tables {
        assert!(printed.contains(&t.title));
    }

    std::fs::remove_file(out.join("model_metrics.csv")).unwrap();
    let r = subpheno(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("model_metrics.csv"));
}

#[test]
fn identical_configs_give_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_small(dir.path(), "6");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_small(dir.path(), &data, out.to_str().unwrap());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in BUNDLE_FILES.iter().filter(|f| f.ends_with(".csv")) {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}
