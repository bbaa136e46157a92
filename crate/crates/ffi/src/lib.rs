//! C ABI over the potrend library.
//!
//! Every fallible function returns a [`PotrendStatus`]; on failure the
//! message is available from [`potrend_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use chrono::NaiveDate;
use potrend::calendar::PotClass;
use potrend::config::PipelineConfig;
use potrend::corpus::{tokenize_text, TokenizedDoc};
use potrend::lexicon::{pot_score, ClassCorpus, PotWindow};
use potrend::metrics::{accuracy, f1, mcc, ConfusionMatrix};
use potrend::pipeline::{write_synthetic, Pipeline, TrajectoryRequest};
use potrend::synth::SynthConfig;
use potrend::Error;

/// Result of a call. The first four values match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotrendStatus {
    Ok = 0,
    Config = 1,
    Data = 2,
    Numeric = 3,
    /// A null pointer, invalid UTF-8 or an out-of-range value.
    InvalidArgument = 4,
    /// The library panicked; the handle involved should be freed.
    Panic = 5,
}

/// Week class of a document added to a POT window.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotrendPotClass {
    VeryPositive = 0,
    Positive = 1,
    Neutral = 2,
    Negative = 3,
    VeryNegative = 4,
}


/// Classification metrics of one prediction vector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotrendMetrics {
    pub accuracy: f64,
    pub mcc: f64,
    /// Nonzero when the MCC denominator is zero and `mcc` is reported as 0.
    pub mcc_degenerate: c_int,
    /// F1 of the highest class index.
    pub f1_last: f64,
}

/// A locked work directory with its configuration.
pub struct PotrendPipeline {
    inner: Pipeline,
}

/// Documents of one scoring window, grouped by week class.
pub struct PotrendPotWindow {
    docs: Vec<(PotClass, TokenizedDoc)>,
    cached: Option<PotWindow>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: PotrendStatus, msg: impl Into<String>) -> PotrendStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> PotrendStatus {
    match e.exit_code() {
        1 => PotrendStatus::Config,
        3 => PotrendStatus::Numeric,
        _ => PotrendStatus::Data,
    }
}

/// Runs `f`, clearing the last error first and turning errors and panics
/// into status codes.
fn guard(f: impl FnOnce() -> Result<(), PotrendStatus>) -> PotrendStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PotrendStatus::Ok,
        Ok(Err(status)) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(PotrendStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lib(e: Error) -> PotrendStatus {
    let status = status_of(&e);
    fail(status, e.to_string())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, PotrendStatus> {
    if p.is_null() {
        return Err(fail(PotrendStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PotrendStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, PotrendStatus> {
    p.as_mut().ok_or_else(|| fail(PotrendStatus::InvalidArgument, format!("{what} is null")))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn potrend_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn potrend_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Writes a synthetic corpus and its `pipeline.toml` into `out_dir`.
///
/// # Safety
/// `out_dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn potrend_synth(out_dir: *const c_char, seed: u64, rho: f64) -> PotrendStatus {
    guard(|| {
        let out = text(out_dir, "out_dir")?;
        let config = SynthConfig { seed, rho, ..Default::default() };
        config.validate().map_err(lib)?;
        write_synthetic(&config, Path::new(out)).map_err(lib)?;
        Ok(())
    })
}

/// Opens and locks the work directory named by the configuration at
/// `config_path` (null for defaults). `overrides` holds `n_overrides`
/// `key=value` strings applied on top.
///
/// # Safety
/// Strings must be NUL-terminated, `overrides` must point to
/// `n_overrides` strings (or be null when it is 0), and `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn potrend_pipeline_open(
    config_path: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    force: c_int,
    out: *mut *mut PotrendPipeline,
) -> PotrendStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PotrendStatus::InvalidArgument, "out is null"));
        }
        *out = std::ptr::null_mut();
        let path = if config_path.is_null() { None } else { Some(Path::new(text(config_path, "config_path")?)) };
        if n_overrides > 0 && overrides.is_null() {
            return Err(fail(PotrendStatus::InvalidArgument, "overrides is null"));
        }
        let mut sets = Vec::with_capacity(n_overrides);
        for i in 0..n_overrides {
            sets.push(text(*overrides.add(i), "override")?.to_string());
        }
        let config = PipelineConfig::load(path, &sets).map_err(lib)?;
        let inner = Pipeline::open(config, force != 0).map_err(lib)?;
        *out = Box::into_raw(Box::new(PotrendPipeline { inner }));
        Ok(())
    })
}

/// Runs one stage by its CLI name (`ingest`, `label`, `pot`,
/// `train-extractor`, `score`, `train-summarizer`, `evaluate`,
/// `export-plot-data`) or `run` for all of them.
///
/// # Safety
/// `pipeline` must come from [`potrend_pipeline_open`]; `stage` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn potrend_pipeline_run(pipeline: *mut PotrendPipeline, stage: *const c_char) -> PotrendStatus {
    guard(|| {
        let p = &handle(pipeline, "pipeline")?.inner;
        let result = match text(stage, "stage")? {
            "ingest" => p.ingest().map(drop),
            "label" => p.label().map(drop),
            "pot" => p.pot(None).map(drop),
            "train-extractor" => p.train_extractor().map(drop),
            "score" => p.score().map(drop),
            "train-summarizer" => p.train_summarizer().map(drop),
            "evaluate" => p.evaluate().map(drop),
            "export-plot-data" => p.export_plot_data(&[]).map(drop),
            "run" => p.run_all().map(drop),
            other => return Err(fail(PotrendStatus::InvalidArgument, format!("unknown stage {other:?}"))),
        };
        result.map_err(lib)
    })
}

/// Reruns the `pot` stage and writes the trajectory of `word` between two
/// ISO dates (`YYYY-MM-DD`) to `trajectory_<word>.csv` in the work directory.
///
/// # Safety
/// `pipeline` must come from [`potrend_pipeline_open`]; strings must be
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn potrend_pipeline_trajectory(
    pipeline: *mut PotrendPipeline,
    word: *const c_char,
    from: *const c_char,
    to: *const c_char,
) -> PotrendStatus {
    guard(|| {
        let p = &handle(pipeline, "pipeline")?.inner;
        let date = |s: &str| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().ok_or_else(|| fail(PotrendStatus::InvalidArgument, format!("{s:?} is not YYYY-MM-DD")))
        };
        let request = TrajectoryRequest {
            word: text(word, "word")?.to_string(),
            from: date(text(from, "from")?)?,
            to: date(text(to, "to")?)?,
        };
        if request.from > request.to {
            return Err(fail(PotrendStatus::Config, "from is after to"));
        }
        p.pot(Some(&request)).map(drop).map_err(lib)
    })
}

/// Releases a pipeline handle and its work directory lock. Null is ignored.
///
/// # Safety
/// `pipeline` must come from [`potrend_pipeline_open`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn potrend_pipeline_free(pipeline: *mut PotrendPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// An empty POT scoring window.
#[no_mangle]
pub extern "C" fn potrend_pot_window_new() -> *mut PotrendPotWindow {
    Box::into_raw(Box::new(PotrendPotWindow { docs: Vec::new(), cached: None }))
}

/// Tokenizes `doc_text` and adds it as one document of week class `class`,
/// a [`PotrendPotClass`] value.
///
/// # Safety
/// `window` must come from [`potrend_pot_window_new`]; `doc_text` must be
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn potrend_pot_window_add(
    window: *mut PotrendPotWindow,
    class: c_int,
    doc_text: *const c_char,
) -> PotrendStatus {
    guard(|| {
        let w = handle(window, "window")?;
        let class = usize::try_from(class)
            .ok()
            .and_then(|i| PotClass::ALL.get(i).copied())
            .ok_or_else(|| fail(PotrendStatus::InvalidArgument, format!("class {class} is not 0..=4")))?;
        let body = text(doc_text, "text")?;
        let id = w.docs.len().to_string();
        w.docs.push((class, TokenizedDoc { record_id: id, tokens: tokenize_text(body).collect() }));
        w.cached = None;
        Ok(())
    })
}

/// POT score of `word` (lowercased) in the window with weight `alpha` on
/// the moderate classes.
///
/// # Safety
/// `window` must come from [`potrend_pot_window_new`]; `word` must be
/// NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn potrend_pot_window_score(
    window: *mut PotrendPotWindow,
    word: *const c_char,
    alpha: f64,
    out: *mut f64,
) -> PotrendStatus {
    guard(|| {
        let w = handle(window, "window")?;
        let word = text(word, "word")?.to_lowercase();
        if out.is_null() {
            return Err(fail(PotrendStatus::InvalidArgument, "out is null"));
        }
        if !alpha.is_finite() {
            return Err(fail(PotrendStatus::InvalidArgument, "alpha is not finite"));
        }
        let docs = &w.docs;
        let pot = w.cached.get_or_insert_with(|| {
            let classes: Vec<ClassCorpus> = PotClass::ALL
                .iter()
                .map(|&c| ClassCorpus::new(c, docs.iter().filter(|(k, _)| *k == c).map(|(_, d)| d)))
                .collect();
            PotWindow::from_classes(&classes)
        });
        *out = pot_score(&word, pot, alpha);
        Ok(())
    })
}

/// Releases a POT window. Null is ignored.
///
/// # Safety
/// `window` must come from [`potrend_pot_window_new`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn potrend_pot_window_free(window: *mut PotrendPotWindow) {
    if !window.is_null() {
        drop(Box::from_raw(window));
    }
}

/// Accuracy, MCC and F1 of `predictions` against `truths`, both `n` class
/// indices below `classes`.
///
/// # Safety
/// `truths` and `predictions` must point to `n` values; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn potrend_metrics(
    truths: *const u32,
    predictions: *const u32,
    n: usize,
    classes: u32,
    out: *mut PotrendMetrics,
) -> PotrendStatus {
    guard(|| {
        if truths.is_null() || predictions.is_null() || out.is_null() {
            return Err(fail(PotrendStatus::InvalidArgument, "null argument"));
        }
        if n == 0 || classes < 2 {
            return Err(fail(PotrendStatus::InvalidArgument, "need at least one item and two classes"));
        }
        let t: Vec<usize> = std::slice::from_raw_parts(truths, n).iter().map(|&x| x as usize).collect();
        let p: Vec<usize> = std::slice::from_raw_parts(predictions, n).iter().map(|&x| x as usize).collect();
        let k = classes as usize;
        let cm = ConfusionMatrix::from_labels(k, &t, &p)
            .map_err(|e| fail(PotrendStatus::InvalidArgument, e.to_string()))?;
        let m = mcc(&cm).map_err(|e| lib(e.into()))?;
        *out = PotrendMetrics {
            accuracy: accuracy(&cm).map_err(|e| lib(e.into()))?,
            mcc: m.value,
            mcc_degenerate: c_int::from(m.degenerate),
            f1_last: f1(&cm, k - 1).map_err(|e| lib(e.into()))?,
        };
        Ok(())
    })
}
