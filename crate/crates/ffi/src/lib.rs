//! C ABI over the benchmark generator, baseline forecaster and metrics.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free` function. Every fallible call returns a
//! [`SynthtsStatus`]; on failure [`synthts_last_error`] describes it.
//! No panic crosses the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use synthts::baseline::{LinearForecaster, NormMode};
use synthts::bench::{self, BenchOptions};
use synthts::config::ConfigFile;
use synthts::dataset::{self, DatasetInstance};
use synthts::exchange::{self, PredictionFormat};
use synthts::metrics;
use synthts::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthtsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Checksum = 4,
    Shape = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Which matrix of an instance to read.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthtsSeries {
    Clean = 0,
    Mixed = 1,
}

/// Generated or loaded dataset instance.
pub struct SynthtsInstance {
    inner: DatasetInstance,
}

/// Fitted linear forecaster.
pub struct SynthtsForecaster {
    inner: LinearForecaster,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SynthtsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Io { .. } => SynthtsStatus::Io,
            Error::Checksum { .. } => SynthtsStatus::Checksum,
            Error::Shape { .. } => SynthtsStatus::Shape,
            Error::Singular(_) | Error::Degenerate { .. } | Error::Sampling(_) => SynthtsStatus::Numeric,
            _ => SynthtsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SynthtsStatus::NullArgument, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SynthtsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SynthtsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SynthtsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SynthtsStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    str_arg(p, name).map(PathBuf::from)
}

unsafe fn out_arg<'a, T>(p: *mut *mut T, name: &str) -> Result<&'a mut *mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn synthts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn synthts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates an instance from TOML text (null for desk-scale defaults).
///
/// # Safety
/// `config_toml` is null or a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn synthts_instance_generate(
    config_toml: *const c_char,
    seed: u64,
    use_seed: bool,
    out: *mut *mut SynthtsInstance,
) -> SynthtsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let file = if config_toml.is_null() {
            ConfigFile::default()
        } else {
            ConfigFile::parse(str_arg(config_toml, "config_toml")?)?
        };
        let cfg = file.instance(use_seed.then_some(seed))?;
        let inner = dataset::generate_instance(&cfg)?;
        *out = Box::into_raw(Box::new(SynthtsInstance { inner }));
        Ok(())
    })
}

/// Loads and revalidates an instance directory.
///
/// # Safety
/// `dir` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn synthts_instance_open(
    dir: *const c_char,
    out: *mut *mut SynthtsInstance,
) -> SynthtsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = dataset::read_instance(&path_arg(dir, "dir")?)?;
        *out = Box::into_raw(Box::new(SynthtsInstance { inner }));
        Ok(())
    })
}

/// Writes the instance directory layout.
///
/// # Safety
/// `inst` is a live handle; `dir` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn synthts_instance_write(
    inst: *const SynthtsInstance,
    dir: *const c_char,
    with_csv: bool,
) -> SynthtsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        dataset::write_instance(&inst.inner, &path_arg(dir, "dir")?, with_csv)?;
        Ok(())
    })
}

/// # Safety
/// `inst` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn synthts_instance_free(inst: *mut SynthtsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` is a live handle; `samples` and `variates` are writable.
#[no_mangle]
pub unsafe extern "C" fn synthts_instance_shape(
    inst: *const SynthtsInstance,
    samples: *mut usize,
    variates: *mut usize,
) -> SynthtsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        *samples.as_mut().ok_or_else(|| null("samples"))? = inst.inner.samples();
        *variates.as_mut().ok_or_else(|| null("variates"))? = inst.inner.variates();
        Ok(())
    })
}

/// Copies a matrix, column-major (`samples` values per variate), into
/// `buf` of `len` doubles.
///
/// # Safety
/// `inst` is a live handle; `buf` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn synthts_instance_copy(
    inst: *const SynthtsInstance,
    which: SynthtsSeries,
    buf: *mut f64,
    len: usize,
) -> SynthtsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let m = match which {
            SynthtsSeries::Clean => &inst.inner.clean,
            SynthtsSeries::Mixed => &inst.inner.mixed,
        };
        let src = m.as_slice();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < src.len() {
            return Err(Failure(
                SynthtsStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", src.len()),
            ));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

/// Writes the hex SHA-256 of a matrix (64 chars plus NUL) into `buf`.
///
/// # Safety
/// `inst` is a live handle; `buf` points to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn synthts_instance_checksum(
    inst: *const SynthtsInstance,
    which: SynthtsSeries,
    buf: *mut c_char,
    len: usize,
) -> SynthtsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let sums = &inst.inner.manifest.checksums;
        let hex = match which {
            SynthtsSeries::Clean => &sums.clean_sha256,
            SynthtsSeries::Mixed => &sums.mixed_sha256,
        };
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < hex.len() + 1 {
            return Err(Failure(SynthtsStatus::BufferTooSmall, format!("need {} bytes", hex.len() + 1)));
        }
        ptr::copy_nonoverlapping(hex.as_ptr().cast::<c_char>(), buf, hex.len());
        *buf.add(hex.len()) = 0;
        Ok(())
    })
}

fn options(lookback: usize, horizon: usize, lambda: f64) -> BenchOptions {
    BenchOptions { lookback, horizon, lambda, ..Default::default() }
}

/// Fits the pooled baseline on the observed training split (0.7/0.1/0.2)
/// with per-window normalization.
///
/// # Safety
/// `inst` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn synthts_forecaster_fit(
    inst: *const SynthtsInstance,
    lookback: usize,
    horizon: usize,
    lambda: f64,
    out: *mut *mut SynthtsForecaster,
) -> SynthtsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let out = out_arg(out, "out")?;
        let inner = bench::fit_baseline(&inst.inner, &options(lookback, horizon, lambda))?;
        *out = Box::into_raw(Box::new(SynthtsForecaster { inner }));
        Ok(())
    })
}

/// Forecasts `horizon` values from `lookback` inputs.
///
/// # Safety
/// `model` is a live handle; `input` holds `input_len` doubles and
/// `output` has room for `output_len`.
#[no_mangle]
pub unsafe extern "C" fn synthts_forecaster_predict(
    model: *const SynthtsForecaster,
    variate: usize,
    input: *const f64,
    input_len: usize,
    output: *mut f64,
    output_len: usize,
) -> SynthtsStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if input.is_null() {
            return Err(null("input"));
        }
        if output.is_null() {
            return Err(null("output"));
        }
        let x = std::slice::from_raw_parts(input, input_len);
        let y = std::slice::from_raw_parts_mut(output, output_len);
        model.inner.predict_into(variate, x, y)?;
        Ok(())
    })
}

/// # Safety
/// `model` is a live handle; `path` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn synthts_forecaster_save(
    model: *const SynthtsForecaster,
    path: *const c_char,
) -> SynthtsStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        model.inner.save(&path_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn synthts_forecaster_load(
    path: *const c_char,
    out: *mut *mut SynthtsForecaster,
) -> SynthtsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = LinearForecaster::load(&path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(SynthtsForecaster { inner }));
        Ok(())
    })
}

/// Lookback and horizon of a model.
///
/// # Safety
/// `model` is a live handle; the out pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn synthts_forecaster_dims(
    model: *const SynthtsForecaster,
    lookback: *mut usize,
    horizon: *mut usize,
) -> SynthtsStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        *lookback.as_mut().ok_or_else(|| null("lookback"))? = model.inner.lookback();
        *horizon.as_mut().ok_or_else(|| null("horizon"))? = model.inner.horizon();
        Ok(())
    })
}

/// # Safety
/// `model` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn synthts_forecaster_free(model: *mut SynthtsForecaster) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scores a prediction exchange file against an instance's test split.
/// `.csv` paths are read as CSV, others as the binary format.
///
/// # Safety
/// `inst` is a live handle; `path` is a NUL-terminated string; the out
/// pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn synthts_evaluate_file(
    inst: *const SynthtsInstance,
    path: *const c_char,
    lookback: usize,
    horizon: usize,
    stride: usize,
    mse_clean: *mut f64,
    mse_noisy: *mut f64,
) -> SynthtsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let path = path_arg(path, "path")?;
        let pred = exchange::read_predictions(&path, PredictionFormat::from_path(&path))?;
        let opts = BenchOptions { stride, norm: NormMode::Window, ..options(lookback, horizon, 0.0) };
        let report = bench::evaluate_forecasts(&inst.inner, &pred, &opts, "external", 0)?;
        *mse_clean.as_mut().ok_or_else(|| null("mse_clean"))? = report.mse_clean;
        *mse_noisy.as_mut().ok_or_else(|| null("mse_noisy"))? = report.mse_noisy;
        Ok(())
    })
}

/// Mean squared error of two equal-length arrays.
///
/// # Safety
/// `pred` and `target` hold `len` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn synthts_mse(
    pred: *const f64,
    target: *const f64,
    len: usize,
    out: *mut f64,
) -> SynthtsStatus {
    guard(|| {
        if pred.is_null() || target.is_null() {
            return Err(null("pred/target"));
        }
        let p = metrics::WindowTensor::from_vec(1, 1, len, std::slice::from_raw_parts(pred, len).to_vec())?;
        let t = metrics::WindowTensor::from_vec(1, 1, len, std::slice::from_raw_parts(target, len).to_vec())?;
        *out.as_mut().ok_or_else(|| null("out"))? = metrics::mse(&p, &t)?;
        Ok(())
    })
}

/// `ceil(n / t)`; zero when either argument is zero.
#[no_mangle]
pub extern "C" fn synthts_capture_threshold(n: usize, t: usize) -> usize {
    if n == 0 || t == 0 {
        0
    } else {
        metrics::capture_threshold(n, t)
    }
}
