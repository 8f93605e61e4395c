//! C ABI over the `fcca` library.
//!
//! Objects cross the boundary as opaque handles created by `*_load` /
//! `*_train_*` functions and released by the matching `*_free`. Every
//! fallible call returns an [`FccaStatus`]; on failure the message is
//! available from [`fcca_last_error`] on the same thread. Panics are caught
//! and reported as `FCCA_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fcca::counterfactual::{solve, CeProblem};
use fcca::data::{load_csv, scale_minmax, Dataset};
use fcca::models::{load_model, save_model, train_gb, train_rf, GbParams, RfParams, SavedModel, TargetModel};
use fcca::pipeline::{run_fcca, RunConfig};
use fcca::FccaError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FccaStatus {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    Data = 3,
    Infeasible = 4,
    Io = 5,
    Internal = 6,
}

/// A scaled dataset.
pub struct FccaDataset {
    inner: Dataset,
}

/// A target model with its scaler and per-feature resolution.
pub struct FccaModel {
    inner: SavedModel,
}

struct Failure {
    status: FccaStatus,
    message: String,
}

impl From<FccaError> for Failure {
    fn from(e: FccaError) -> Self {
        let status = match &e {
            FccaError::Config(_) => FccaStatus::Config,
            FccaError::Infeasible(_) => FccaStatus::Infeasible,
            FccaError::Io { .. } => FccaStatus::Io,
            FccaError::InvalidProblem(_) => FccaStatus::InvalidArgument,
            FccaError::Model(_) => FccaStatus::Internal,
            FccaError::Data(_)
            | FccaError::NonNumeric { .. }
            | FccaError::Dimension { .. }
            | FccaError::Json(_)
            | FccaError::Csv(_) => FccaStatus::Data,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn invalid(message: &str) -> Failure {
    Failure {
        status: FccaStatus::InvalidArgument,
        message: message.into(),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FccaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FccaStatus::Ok
        }
        Ok(Err(fail)) => {
            set_error(&fail.message);
            fail.status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            FccaStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid(&format!("{name} is null")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fcca_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fcca_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a CSV and scales it to `[0, 1]`. `label` may be null for the last column.
///
/// # Safety
/// `path` and a non-null `label` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fcca_dataset_load(
    path: *const c_char,
    label: *const c_char,
    out: *mut *mut FccaDataset,
) -> FccaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let label = if label.is_null() { None } else { Some(str_arg(label, "label")?) };
        let ds = scale_minmax(&load_csv(path, label)?)?;
        *out = Box::into_raw(Box::new(FccaDataset { inner: ds }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn fcca_dataset_free(ds: *mut FccaDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Row count; 0 for null.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fcca_dataset_n_rows(ds: *const FccaDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n_rows())
}

/// Retained feature count; 0 for null.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fcca_dataset_n_features(ds: *const FccaDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n_features())
}

fn wrap(ds: &Dataset, model: TargetModel) -> *mut FccaModel {
    Box::into_raw(Box::new(FccaModel {
        inner: SavedModel {
            model,
            scaler: ds.scaler.clone(),
            feature_names: ds.feature_names.clone(),
            eps: Some(ds.eps.clone()),
        },
    }))
}

/// Gradient boosting on the whole dataset.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fcca_model_train_gb(
    ds: *const FccaDataset,
    n_estimators: usize,
    max_depth: usize,
    learning_rate: f64,
    out: *mut *mut FccaModel,
) -> FccaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ds = &ds.as_ref().ok_or_else(|| invalid("dataset is null"))?.inner;
        let params = GbParams {
            n_estimators,
            max_depth,
            learning_rate,
            ..Default::default()
        };
        *out = wrap(ds, TargetModel::Ensemble(train_gb(ds, &params)?));
        Ok(())
    })
}

/// Random forest on the whole dataset.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fcca_model_train_rf(
    ds: *const FccaDataset,
    n_trees: usize,
    max_depth: usize,
    seed: u64,
    out: *mut *mut FccaModel,
) -> FccaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ds = &ds.as_ref().ok_or_else(|| invalid("dataset is null"))?.inner;
        let params = RfParams {
            n_trees,
            max_depth,
            max_features: None,
            seed,
        };
        *out = wrap(ds, TargetModel::Ensemble(train_rf(ds, &params)?));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fcca_model_save(model: *const FccaModel, path: *const c_char) -> FccaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        save_model(str_arg(path, "path")?, &m.inner)?;
        Ok(())
    })
}

/// # Safety
/// `path` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fcca_model_load(path: *const c_char, out: *mut *mut FccaModel) -> FccaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let inner = load_model(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(FccaModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn fcca_model_free(model: *mut FccaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature count of the model; 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fcca_model_n_features(model: *const FccaModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.model.n_features())
}

/// Predicts a scaled input of `len` values. `label` and `probability`
/// (class-1 probability) may be null.
///
/// # Safety
/// `x` must point to `len` doubles; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fcca_model_predict(
    model: *const FccaModel,
    x: *const f64,
    len: usize,
    label: *mut u8,
    probability: *mut f64,
) -> FccaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        if x.is_null() {
            return Err(invalid("x is null"));
        }
        let p = m.inner.model.predict(std::slice::from_raw_parts(x, len))?;
        if let Some(l) = label.as_mut() {
            *l = p.label;
        }
        if let Some(pr) = probability.as_mut() {
            *pr = p.probability;
        }
        Ok(())
    })
}

/// Minimum-cost counterfactual of scaled `x0` with costs
/// `lambda0 * changed + lambda1 * |d|_1 + lambda2 * |d|^2`, box `[0, 1]` and
/// the model's stored resolution. Writes the counterfactual into `x_ce`
/// (`len` doubles, equal to `x0` when infeasible), its cost, and
/// `*optimal = 1` when found, 0 when no counterfactual exists.
///
/// # Safety
/// `x0` and `x_ce` must point to `len` doubles; `cost` and `optimal` writable.
#[no_mangle]
pub unsafe extern "C" fn fcca_counterfactual(
    model: *const FccaModel,
    x0: *const f64,
    len: usize,
    lambda0: f64,
    lambda1: f64,
    lambda2: f64,
    x_ce: *mut f64,
    cost: *mut f64,
    optimal: *mut i32,
) -> FccaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        if x0.is_null() || x_ce.is_null() {
            return Err(invalid("x0 or x_ce is null"));
        }
        let cost = out_arg(cost, "cost")?;
        let optimal = out_arg(optimal, "optimal")?;
        let x = std::slice::from_raw_parts(x0, len).to_vec();
        let n = m.inner.model.n_features();
        let eps = m.inner.eps.clone().unwrap_or_else(|| vec![1e-3; n]);
        let prob = CeProblem::new(&m.inner.model, x, eps)?.with_costs(lambda0, lambda1, lambda2);
        let sol = solve(&m.inner.model, &prob)?;
        std::slice::from_raw_parts_mut(x_ce, len).copy_from_slice(&sol.x_ce);
        *cost = sol.cost;
        *optimal = i32::from(sol.is_optimal());
        Ok(())
    })
}

/// Runs the cross-validated pipeline. `config` is config-file text (may be
/// null for defaults); a non-null `dataset` overrides its dataset path. On
/// success `*report_json` receives the report, to be released with
/// [`fcca_string_free`].
///
/// # Safety
/// Non-null strings NUL-terminated; `report_json` writable.
#[no_mangle]
pub unsafe extern "C" fn fcca_run_pipeline(
    config: *const c_char,
    dataset: *const c_char,
    report_json: *mut *mut c_char,
) -> FccaStatus {
    guard(|| {
        let out = out_arg(report_json, "report_json")?;
        *out = ptr::null_mut();
        let mut cfg = RunConfig::default();
        if !config.is_null() {
            cfg.apply_text(str_arg(config, "config")?)?;
        }
        if !dataset.is_null() {
            cfg.dataset = str_arg(dataset, "dataset")?.into();
        }
        let json = run_fcca(&cfg)?.report.to_json();
        *out = CString::new(json)
            .map_err(|_| invalid("report contains NUL"))?
            .into_raw();
        Ok(())
    })
}
