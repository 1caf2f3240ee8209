//! C ABI over `sngbench`.
//!
//! Every fallible call returns an [`SngStatus`]. On failure a message is
//! kept per thread and can be read with [`sng_last_error`]. Strings handed
//! out by this library must be released with [`sng_string_free`]; handles
//! with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sngbench::harness::{
    emit_table, make_planner, run_ablation, ArmSpec, ExperimentSpec, ResultsTable, TableFormat,
};
use sngbench::map::{bundled, parse_scenario, Scenario};
use sngbench::metrics::{evaluate, ComfortBounds};
use sngbench::planners::plan_expert;
use sngbench::sim::EpisodeConfig;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SngStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidScenario = 3,
    InvalidArgument = 4,
    Runtime = 5,
    Panic = 6,
}

/// Opaque scenario handle.
pub struct SngScenario {
    inner: Scenario,
}

/// Opaque handle to a finished experiment.
pub struct SngResults {
    inner: ResultsTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SngStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SngStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SngStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SngStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(SngStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(SngStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(
            SngStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(
            SngStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    let c = CString::new(s).map_err(|e| Fail(SngStatus::Runtime, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn checked(scenario: Scenario) -> Result<Scenario, Fail> {
    scenario
        .validate()
        .map_err(|e| Fail(SngStatus::InvalidScenario, e.to_string()))?;
    Ok(scenario)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn sng_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sng_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sng_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scenario document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sng_scenario_from_json(
    json: *const c_char,
    out: *mut *mut SngScenario,
) -> SngStatus {
    guard(|| {
        let text = text(json, "json")?;
        let scenario =
            parse_scenario(text).map_err(|e| Fail(SngStatus::InvalidScenario, e.to_string()))?;
        put(
            out,
            SngScenario {
                inner: checked(scenario)?,
            },
        )
    })
}

/// Loads a bundled scenario by id.
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sng_scenario_bundled(
    id: *const c_char,
    out: *mut *mut SngScenario,
) -> SngStatus {
    guard(|| {
        let id = text(id, "id")?;
        let g = bundled(id).ok_or_else(|| {
            Fail(
                SngStatus::InvalidArgument,
                format!("unknown bundled scenario {id:?}"),
            )
        })?;
        put(out, SngScenario { inner: g.scenario })
    })
}

/// Scenario serialized back to JSON.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sng_scenario_to_json(
    scenario: *const SngScenario,
    out: *mut *mut c_char,
) -> SngStatus {
    guard(|| {
        let s = scenario
            .as_ref()
            .ok_or_else(|| Fail(SngStatus::NullPointer, "scenario is null".into()))?;
        put_string(out, sngbench::map::serialize_scenario(&s.inner))
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sng_scenario_free(scenario: *mut SngScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs one closed-loop episode and writes its metric report as JSON.
///
/// `arm_json` describes planner and navigation input, e.g.
/// `{"planner":"sng","nav":"sng","sampling":"4x10","tbt":true}`.
///
/// # Safety
/// `scenario` must be a live handle, `arm_json` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sng_evaluate(
    scenario: *const SngScenario,
    arm_json: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> SngStatus {
    guard(|| {
        let s = &scenario
            .as_ref()
            .ok_or_else(|| Fail(SngStatus::NullPointer, "scenario is null".into()))?
            .inner;
        let spec: ArmSpec = serde_json::from_str(text(arm_json, "arm_json")?)
            .map_err(|e| Fail(SngStatus::InvalidArgument, e.to_string()))?;
        let arm = spec
            .resolve()
            .map_err(|e| Fail(SngStatus::InvalidArgument, e.to_string()))?;
        let runtime = |e: String| Fail(SngStatus::Runtime, e);
        let planner = make_planner(arm.planner, s).map_err(runtime)?;
        let expert = plan_expert(s).map_err(|e| runtime(e.to_string()))?;
        let cfg = EpisodeConfig {
            nav: arm.nav,
            seed,
            ..EpisodeConfig::default()
        };
        let ev = evaluate(
            s,
            planner.as_ref(),
            &cfg,
            &expert,
            &ComfortBounds::default(),
        )
        .map_err(|e| runtime(e.to_string()))?;
        put_string(
            out,
            serde_json::to_string(&ev.report).map_err(|e| runtime(e.to_string()))?,
        )
    })
}

/// Runs an experiment described by `spec_json`. `threads` = 0 picks the
/// default worker count.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sng_ablate(
    spec_json: *const c_char,
    threads: u32,
    out: *mut *mut SngResults,
) -> SngStatus {
    guard(|| {
        let spec = ExperimentSpec::from_json(text(spec_json, "spec_json")?)
            .map_err(|e| Fail(SngStatus::InvalidArgument, e.to_string()))?;
        let threads = (threads > 0).then_some(threads as usize);
        let table =
            run_ablation(&spec, threads).map_err(|e| Fail(SngStatus::Runtime, e.to_string()))?;
        put(out, SngResults { inner: table })
    })
}

/// Number of cells in a finished experiment, 0 for a null handle.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sng_results_len(results: *const SngResults) -> usize {
    results.as_ref().map_or(0, |r| r.inner.rows.len())
}

/// Aggregate table in `csv`, `markdown` or `jsonl`.
///
/// # Safety
/// `results` must be a live handle, `format` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sng_results_table(
    results: *const SngResults,
    format: *const c_char,
    out: *mut *mut c_char,
) -> SngStatus {
    guard(|| {
        let r = results
            .as_ref()
            .ok_or_else(|| Fail(SngStatus::NullPointer, "results is null".into()))?;
        let name = text(format, "format")?;
        let format = TableFormat::parse(name).ok_or_else(|| {
            Fail(
                SngStatus::InvalidArgument,
                format!("unknown format {name:?}"),
            )
        })?;
        put_string(out, emit_table(&r.inner, format))
    })
}

/// # Safety
/// `results` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sng_results_free(results: *mut SngResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}
