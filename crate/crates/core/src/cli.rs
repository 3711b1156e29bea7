//! Command-line front end. Every command is a library call so it can be
//! driven from tests or other programs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::pipeline::{overlay, run_full_pipeline, RunConfig};
use crate::report::bundle_tables;
use crate::synth::{self_check, write_cohort, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "subpheno", version, about = "Unsupervised subphenotyping of delirium cohorts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// JSON file whose keys override the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `desk` or `paper-scale`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Validate the configuration and exit without writing anything.
    #[arg(long)]
    pub dry_run: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort and self-check it.
    Synth(CommonArgs),
    /// Run the full pipeline and write a report bundle.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Admissions CSV (overrides the config).
        #[arg(long)]
        admissions: Option<PathBuf>,
        /// Measurements CSV (overrides the config).
        #[arg(long)]
        measurements: Option<PathBuf>,
    },
    /// Print the summary tables of an existing bundle.
    Report {
        /// Bundle directory written by `run`.
        bundle: PathBuf,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Exit code for an error: configuration problems are usage errors.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?
            .install(f),
    }
}

/// Resolves the synthetic cohort spec from preset, config file and flags.
pub fn synth_spec(args: &CommonArgs) -> Result<SynthSpec> {
    let base = SynthSpec::preset(args.preset.as_deref().unwrap_or("desk"))?;
    let mut spec = match &args.config {
        Some(p) => overlay(base, read_json(p)?)?,
        None => base,
    };
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

/// `synth`: writes the three CSVs and returns a printable summary.
pub fn cmd_synth(args: &CommonArgs) -> Result<String> {
    let spec = synth_spec(args)?;
    let out = args.out.clone().ok_or_else(|| Error::Config("--out is required".into()))?;
    if args.dry_run {
        return Ok(format!(
            "spec valid: {} cases, {} non-cases, k={}; nothing written\n",
            spec.n_cases, spec.n_noncases, spec.k_planted
        ));
    }
    with_threads(args.threads, || {
        let summary = write_cohort(&spec, &out)?;
        let report = self_check(&spec, &out)?.ensure()?;
        let mut text = format!(
            "wrote {} admissions ({} index cases, {} index non-cases) and {} measurements to {}\n",
            summary.admissions,
            summary.index_cases,
            summary.index_noncases,
            summary.measurements,
            out.display()
        );
        text.push_str(&format!("self-check: {} of {} checks passed\n", report.checks.len(), report.checks.len()));
        Ok(text)
    })
}

/// Resolves the run configuration from preset, config file and flags.
pub fn run_config(args: &CommonArgs, admissions: Option<PathBuf>, measurements: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            RunConfig::from_json(&text, args.preset.as_deref())?
        }
        None => RunConfig::preset(args.preset.as_deref().unwrap_or("desk"))?,
    };
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if let Some(a) = admissions {
        cfg.admissions = a;
    }
    if let Some(m) = measurements {
        cfg.measurements = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `run`: executes the pipeline and returns a printable summary.
pub fn cmd_run(args: &CommonArgs, admissions: Option<PathBuf>, measurements: Option<PathBuf>) -> Result<String> {
    let cfg = run_config(args, admissions, measurements)?;
    if args.dry_run {
        return Ok("configuration valid; nothing written\n".into());
    }
    let bundle = with_threads(cfg.threads, || run_full_pipeline(&cfg))?;
    let s = &bundle.manifest.summary;
    let mut text = format!(
        "{} cases, {} non-cases; k={} subgroups, kappa {:.3}{}\n",
        s.n_cases,
        s.n_noncases,
        s.k,
        s.kappa,
        if s.unstable_clustering { " (unstable)" } else { "" }
    );
    text.push_str(&format!(
        "re-assignment accuracy {:.3}, macro-F {:.3}\n",
        s.validation_accuracy, s.validation_macro_f
    ));
    for w in &bundle.manifest.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    text.push_str(&format!("bundle written to {}\n", bundle.dir.display()));
    Ok(text)
}

/// `report`: renders the bundle tables.
pub fn cmd_report(bundle: &Path) -> Result<String> {
    let tables = bundle_tables(bundle)?;
    Ok(tables.iter().map(|t| t.render()).collect::<Vec<_>>().join("\n"))
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Run {
            common,
            admissions,
            measurements,
        } => cmd_run(&common, admissions, measurements),
        Command::Report { bundle } => cmd_report(&bundle),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
