//! C ABI over the subpheno pipeline.
//!
//! Every fallible call returns an `SpStatus`; on failure the message is
//! available from `sp_last_error` on the same thread. Handles are opaque and
//! must be released with their matching `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use libc::{c_char, c_double, c_int, size_t};
use subpheno::cluster::{kmeans, silhouette, KMeansConfig};
use subpheno::domain::{ClusterAssignment, MatrixView, Method, Metric};
use subpheno::pipeline::{run_full_pipeline, ReportBundle, RunConfig};
use subpheno::stats::adjusted_rand_index;
use subpheno::synth::{write_cohort, SynthSpec};
use subpheno::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Parse = 5,
    Failed = 6,
    Panic = 7,
}

/// Run configuration under construction.
pub struct SpConfig {
    inner: RunConfig,
}

/// Results of a completed pipeline run.
pub struct SpBundle {
    inner: ReportBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpStatus {
    match e {
        Error::Stage { source, .. } => status_of(source),
        Error::Io { .. } => SpStatus::Io,
        Error::Parse { .. } | Error::Schema { .. } | Error::Csv(_) | Error::Json(_) => SpStatus::Parse,
        Error::Config(_) => SpStatus::Config,
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::ColumnMismatch(_) => {
            SpStatus::InvalidArgument
        }
        Error::SelfCheck(_) | Error::IncompleteBundle(_) => SpStatus::Failed,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SpStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SpStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            SpStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SpStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

unsafe fn mut_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn metric(code: c_int) -> Result<Metric, Fail> {
    match code {
        0 => Ok(Metric::Euclidean),
        1 => Ok(Metric::Cosine),
        other => Err(Fail::Arg(format!("unknown metric code {other}"))),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn sp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a configuration from a preset name (`desk` or `paper-scale`).
#[no_mangle]
pub unsafe extern "C" fn sp_config_from_preset(preset: *const c_char, out: *mut *mut SpConfig) -> SpStatus {
    guard(|| {
        let out = mut_ref(out, "out")?;
        let inner = RunConfig::preset(str_arg(preset, "preset")?)?;
        *out = Box::into_raw(Box::new(SpConfig { inner }));
        Ok(())
    })
}

/// Creates a configuration from JSON text; `preset` may be null.
#[no_mangle]
pub unsafe extern "C" fn sp_config_from_json(
    json: *const c_char,
    preset: *const c_char,
    out: *mut *mut SpConfig,
) -> SpStatus {
    guard(|| {
        let out = mut_ref(out, "out")?;
        let preset = if preset.is_null() {
            None
        } else {
            Some(str_arg(preset, "preset")?)
        };
        let inner = RunConfig::from_json(str_arg(json, "json")?, preset)?;
        *out = Box::into_raw(Box::new(SpConfig { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_config_set_seed(cfg: *mut SpConfig, seed: u64) -> SpStatus {
    guard(|| {
        mut_ref(cfg, "config")?.inner.seed = Some(seed);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_config_set_threads(cfg: *mut SpConfig, threads: size_t) -> SpStatus {
    guard(|| {
        mut_ref(cfg, "config")?.inner.threads = Some(threads);
        Ok(())
    })
}

/// Sets the admissions CSV, measurements CSV and output directory.
#[no_mangle]
pub unsafe extern "C" fn sp_config_set_paths(
    cfg: *mut SpConfig,
    admissions: *const c_char,
    measurements: *const c_char,
    output_dir: *const c_char,
) -> SpStatus {
    guard(|| {
        let cfg = mut_ref(cfg, "config")?;
        cfg.inner.admissions = PathBuf::from(str_arg(admissions, "admissions")?);
        cfg.inner.measurements = PathBuf::from(str_arg(measurements, "measurements")?);
        cfg.inner.output_dir = PathBuf::from(str_arg(output_dir, "output_dir")?);
        Ok(())
    })
}

/// Turns the t-SNE embedding and SVG plots on or off.
#[no_mangle]
pub unsafe extern "C" fn sp_config_set_outputs(cfg: *mut SpConfig, embedding: bool, plots: bool) -> SpStatus {
    guard(|| {
        let cfg = mut_ref(cfg, "config")?;
        cfg.inner.embedding.enabled = embedding;
        cfg.inner.write_plots = plots;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_config_validate(cfg: *const SpConfig) -> SpStatus {
    guard(|| {
        cfg.as_ref().ok_or(Fail::Null("config"))?.inner.validate()?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_config_free(cfg: *mut SpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Writes a synthetic cohort for `preset` with `seed` into `dir`.
#[no_mangle]
pub unsafe extern "C" fn sp_synth_write(preset: *const c_char, seed: u64, dir: *const c_char) -> SpStatus {
    guard(|| {
        let spec = SynthSpec {
            seed,
            ..SynthSpec::preset(str_arg(preset, "preset")?)?
        };
        write_cohort(&spec, &PathBuf::from(str_arg(dir, "dir")?))?;
        Ok(())
    })
}

/// Runs the full pipeline and writes the report bundle.
#[no_mangle]
pub unsafe extern "C" fn sp_run(cfg: *const SpConfig, out: *mut *mut SpBundle) -> SpStatus {
    guard(|| {
        let out = mut_ref(out, "out")?;
        let cfg = &cfg.as_ref().ok_or(Fail::Null("config"))?.inner;
        let run = || run_full_pipeline(cfg);
        let inner = match cfg.threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Fail::Arg(e.to_string()))?
                .install(run),
            None => run(),
        }?;
        *out = Box::into_raw(Box::new(SpBundle { inner }));
        Ok(())
    })
}

unsafe fn bundle<'a>(b: *const SpBundle) -> Result<&'a ReportBundle, Fail> {
    b.as_ref().map(|b| &b.inner).ok_or(Fail::Null("bundle"))
}

/// Number of subgroups chosen.
#[no_mangle]
pub unsafe extern "C" fn sp_bundle_k(b: *const SpBundle, out: *mut size_t) -> SpStatus {
    guard(|| {
        *mut_ref(out, "out")? = bundle(b)?.discovery.k;
        Ok(())
    })
}

/// Number of delirium cases clustered.
#[no_mangle]
pub unsafe extern "C" fn sp_bundle_n_cases(b: *const SpBundle, out: *mut size_t) -> SpStatus {
    guard(|| {
        *mut_ref(out, "out")? = bundle(b)?.features.cases.len();
        Ok(())
    })
}

/// Aligned k-means versus hierarchical kappa, and whether it fell below the threshold.
#[no_mangle]
pub unsafe extern "C" fn sp_bundle_kappa(b: *const SpBundle, kappa: *mut c_double, unstable: *mut bool) -> SpStatus {
    guard(|| {
        let d = &bundle(b)?.discovery;
        *mut_ref(kappa, "kappa")? = d.kappa;
        *mut_ref(unstable, "unstable")? = d.unstable;
        Ok(())
    })
}

/// Held-out re-assignment accuracy and macro-F.
#[no_mangle]
pub unsafe extern "C" fn sp_bundle_validation(
    b: *const SpBundle,
    accuracy: *mut c_double,
    macro_f: *mut c_double,
) -> SpStatus {
    guard(|| {
        let v = &bundle(b)?.validation;
        *mut_ref(accuracy, "accuracy")? = v.accuracy;
        *mut_ref(macro_f, "macro_f")? = v.macro_f;
        Ok(())
    })
}

/// Copies the case subgroup labels into `out` (capacity `len`). `written`
/// receives the number of cases even when `len` is too small.
#[no_mangle]
pub unsafe extern "C" fn sp_bundle_labels(
    b: *const SpBundle,
    out: *mut size_t,
    len: size_t,
    written: *mut size_t,
) -> SpStatus {
    guard(|| {
        let labels = &bundle(b)?.discovery.kmeans.labels;
        *mut_ref(written, "written")? = labels.len();
        if len < labels.len() {
            return Err(Fail::Arg(format!("buffer holds {len} labels, {} needed", labels.len())));
        }
        if !labels.is_empty() {
            if out.is_null() {
                return Err(Fail::Null("out"));
            }
            std::slice::from_raw_parts_mut(out, labels.len()).copy_from_slice(labels);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_bundle_free(b: *mut SpBundle) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// k-means on a row-major `n × d` matrix. `metric` is 0 for euclidean, 1 for cosine.
/// Writes `n` labels and the final inertia.
#[no_mangle]
pub unsafe extern "C" fn sp_kmeans(
    data: *const c_double,
    n: size_t,
    d: size_t,
    k: size_t,
    metric_code: c_int,
    seed: u64,
    labels: *mut size_t,
    inertia: *mut c_double,
) -> SpStatus {
    guard(|| {
        let values = slice(data, n * d, "data")?;
        let x = MatrixView::new(values, d)?;
        let (model, asg) = kmeans(x, k, metric(metric_code)?, seed, &KMeansConfig::default())?;
        if labels.is_null() {
            return Err(Fail::Null("labels"));
        }
        std::slice::from_raw_parts_mut(labels, n).copy_from_slice(&asg.labels);
        *mut_ref(inertia, "inertia")? = model.inertia;
        Ok(())
    })
}

/// Mean silhouette width of `labels` (values in `0..k`) over a row-major `n × d` matrix.
#[no_mangle]
pub unsafe extern "C" fn sp_silhouette(
    data: *const c_double,
    n: size_t,
    d: size_t,
    labels: *const size_t,
    k: size_t,
    metric_code: c_int,
    out: *mut c_double,
) -> SpStatus {
    guard(|| {
        let x = MatrixView::new(slice(data, n * d, "data")?, d)?;
        let metric = metric(metric_code)?;
        let a = ClusterAssignment {
            labels: slice(labels, n, "labels")?.to_vec(),
            k,
            method: Method::Kmeans,
            metric,
            objective: 0.0,
        };
        *mut_ref(out, "out")? = silhouette(x, &a, metric)?.mean_width;
        Ok(())
    })
}

/// Adjusted Rand index between two labelings of length `n`.
#[no_mangle]
pub unsafe extern "C" fn sp_adjusted_rand_index(
    a: *const size_t,
    b: *const size_t,
    n: size_t,
    out: *mut c_double,
) -> SpStatus {
    guard(|| {
        *mut_ref(out, "out")? = adjusted_rand_index(slice(a, n, "a")?, slice(b, n, "b")?)?;
        Ok(())
    })
}
