//! C interface to the beacon library.
//!
//! Objects cross the boundary as opaque handles created by `*_load` /
//! `*_from_json` functions and released with the matching `*_free`.
//! Every fallible function returns a [`BeaconStatus`]; on failure a
//! description is available from [`beacon_last_error`] on the same thread.
//! Strings returned by the library are released with [`beacon_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use beacon::datastore::{read_dataset_csv, read_model_json, to_json_string};
use beacon::detector::{degradation_curve, CurveSpec};
use beacon::domain::{FeatureSet, StationDataset, N_FEATURES};
use beacon::drift::{InterpolatedClimate, SignConvention};
use beacon::models::FittedModel;
use beacon::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeaconStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    Schema = 5,
    Panic = 6,
}

/// A fitted classifier.
pub struct BeaconModel(FittedModel);

/// A labelled station dataset.
pub struct BeaconDataset(StationDataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> BeaconStatus {
    match err {
        Error::Io { .. } => BeaconStatus::Io,
        Error::Schema { .. } | Error::Json(_) => BeaconStatus::Schema,
        Error::AtLevel { source, .. } => status_of(source),
        _ => BeaconStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BeaconStatus>) -> BeaconStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BeaconStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            BeaconStatus::Panic
        }
    }
}

fn fail(err: Error) -> BeaconStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

fn null(what: &str) -> BeaconStatus {
    set_error(format!("{what} is null"));
    BeaconStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, BeaconStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        BeaconStatus::InvalidUtf8
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, BeaconStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

fn give<T>(out: *mut *mut T, value: T) {
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

fn give_string(out: *mut *mut c_char, s: String) -> Result<(), BeaconStatus> {
    let c = CString::new(s).map_err(|_| {
        set_error("string contains an interior NUL");
        BeaconStatus::InvalidInput
    })?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn beacon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn beacon_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beacon_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a model JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beacon_model_load(path: *const c_char, out: *mut *mut BeaconModel) -> BeaconStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let model = read_model_json(Path::new(path)).map_err(fail)?;
        give(out, BeaconModel(model));
        Ok(())
    })
}

/// Parses a model from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beacon_model_from_json(json: *const c_char, out: *mut *mut BeaconModel) -> BeaconStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let model: FittedModel = serde_json::from_str(text).map_err(|e| fail(e.into()))?;
        model.check_schema().map_err(fail)?;
        give(out, BeaconModel(model));
        Ok(())
    })
}

/// Serializes a model to JSON; free the result with `beacon_string_free`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beacon_model_to_json(model: *const BeaconModel, out: *mut *mut c_char) -> BeaconStatus {
    guard(|| {
        let m = handle(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(out, to_json_string(&m.0).map_err(fail)?)
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beacon_model_free(model: *mut BeaconModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of input features the model expects, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beacon_model_n_features(model: *const BeaconModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n_features)
}

unsafe fn rows<'a>(
    model: *const BeaconModel,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
) -> Result<(&'a FittedModel, ndarray::ArrayView2<'a, f64>), BeaconStatus> {
    let m = handle(model, "model")?;
    if n_rows > 0 && x.is_null() {
        return Err(null("x"));
    }
    let len = n_rows.checked_mul(n_features).ok_or_else(|| {
        set_error("matrix size overflows");
        BeaconStatus::InvalidInput
    })?;
    let data: &[f64] = if len == 0 { &[] } else { std::slice::from_raw_parts(x, len) };
    let view = ndarray::ArrayView2::from_shape((n_rows, n_features), data).map_err(|e| {
        set_error(e.to_string());
        BeaconStatus::InvalidInput
    })?;
    Ok((&m.0, view))
}

/// P(on) for each row of a row-major `n_rows × n_features` matrix.
///
/// # Safety
/// `x` must hold `n_rows * n_features` doubles and `out` room for `n_rows`.
#[no_mangle]
pub unsafe extern "C" fn beacon_model_predict_proba(
    model: *const BeaconModel,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut f64,
) -> BeaconStatus {
    guard(|| {
        let (m, view) = rows(model, x, n_rows, n_features)?;
        if n_rows > 0 && out.is_null() {
            return Err(null("out"));
        }
        let p = m.predict_proba(view).map_err(fail)?;
        if n_rows > 0 {
            std::slice::from_raw_parts_mut(out, n_rows).copy_from_slice(&p);
        }
        Ok(())
    })
}

/// Class labels (1 = on, 0 = off) for each row.
///
/// # Safety
/// `x` must hold `n_rows * n_features` doubles and `out` room for `n_rows`.
#[no_mangle]
pub unsafe extern "C" fn beacon_model_predict(
    model: *const BeaconModel,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut u8,
) -> BeaconStatus {
    guard(|| {
        let (m, view) = rows(model, x, n_rows, n_features)?;
        if n_rows > 0 && out.is_null() {
            return Err(null("out"));
        }
        let y = m.predict(view).map_err(fail)?;
        if n_rows > 0 {
            std::slice::from_raw_parts_mut(out, n_rows).copy_from_slice(&y);
        }
        Ok(())
    })
}

/// Loads a dataset CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beacon_dataset_load(path: *const c_char, out: *mut *mut BeaconDataset) -> BeaconStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let ds = read_dataset_csv(Path::new(path)).map_err(fail)?;
        give(out, BeaconDataset(ds));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beacon_dataset_free(dataset: *mut BeaconDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of observations, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beacon_dataset_len(dataset: *const BeaconDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// Solar elevation in degrees at a Unix time.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beacon_solar_elevation(
    latitude: f64,
    longitude: f64,
    unix_seconds: f64,
    out: *mut f64,
) -> BeaconStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(latitude.abs() <= 90.0 && longitude.is_finite() && unix_seconds.is_finite()) {
            set_error("latitude must lie in [-90, 90] and all arguments must be finite");
            return Err(BeaconStatus::InvalidInput);
        }
        *out = beacon::solar::elevation_at(latitude, longitude, unix_seconds);
        Ok(())
    })
}

/// Scores `model` on `dataset` drifted by each level and writes the
/// degradation report as JSON to `out`. Weather at shifted instants is
/// interpolated from the dataset itself. `delayed_response` selects the
/// convention that delays both switch events.
///
/// # Safety
/// Handles must be live, `levels` must hold `n_levels` values and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn beacon_degradation_json(
    model: *const BeaconModel,
    dataset: *const BeaconDataset,
    levels: *const u32,
    n_levels: usize,
    threshold_pp: f64,
    delayed_response: bool,
    out: *mut *mut c_char,
) -> BeaconStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let d = handle(dataset, "dataset")?;
        if levels.is_null() || out.is_null() {
            return Err(null(if levels.is_null() { "levels" } else { "out" }));
        }
        let levels = std::slice::from_raw_parts(levels, n_levels);
        let features = FeatureSet { time_of_day: m.0.n_features == N_FEATURES + 1 };
        let spec = CurveSpec {
            levels,
            convention: if delayed_response { SignConvention::DelayedResponse } else { SignConvention::PaperOperation },
            threshold_pp,
            features,
            model_id: format!("{}", m.0.family),
        };
        let climate = InterpolatedClimate::from_dataset(&d.0);
        let report = degradation_curve(&m.0, &d.0, &spec, &climate).map_err(fail)?;
        give_string(out, to_json_string(&report).map_err(fail)?)
    })
}
