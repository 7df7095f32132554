//! C ABI over the tubecomp library.
//!
//! Scenarios are opaque handles created from JSON or by built-in name and
//! released with `tc_scenario_free`. Every fallible call returns a
//! `TcStatus`; on failure `tc_last_error` describes the cause until the next
//! call on the same thread. Strings handed out by the library are released
//! with `tc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tubecomp::model_kernels::{cheeger_delta, sn_cs, thm1_bound, thm1_constants, ModelCurvature};
use tubecomp::tube::tube_volume_on;
use tubecomp::verification::{run_suite, Context, Registry, Scenario};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    UnknownScenario = 4,
    ComputeFailed = 5,
    /// The report was produced and some bound check failed.
    BoundFailed = 6,
    Panic = 7,
}

/// Opaque scenario handle.
pub struct TcScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: TcStatus, msg: impl Into<String>) -> TcStatus {
    set_error(msg);
    status
}

/// Runs `f`, clearing the error slot first and turning a panic into
/// `TcStatus::Panic`.
fn guard(f: impl FnOnce() -> TcStatus) -> TcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(TcStatus::Panic, "internal panic"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, TcStatus> {
    if s.is_null() {
        return Err(fail(TcStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(TcStatus::InvalidUtf8, e.to_string()))
}

fn into_handle(s: Scenario, out: *mut *mut TcScenario) -> TcStatus {
    if let Err(e) = s.validate() {
        return fail(TcStatus::InvalidConfig, e.to_string());
    }
    // SAFETY: the caller checked `out` for null.
    unsafe { *out = Box::into_raw(Box::new(TcScenario { inner: s })) };
    TcStatus::Ok
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next library call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn tc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a scenario config.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_from_json(json: *const c_char, out: *mut *mut TcScenario) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return fail(TcStatus::NullPointer, "null output pointer");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Scenario::from_json(text) {
            Ok(s) => into_handle(s, out),
            Err(e) => fail(TcStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Looks up a built-in scenario by name.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_builtin(name: *const c_char, out: *mut *mut TcScenario) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return fail(TcStatus::NullPointer, "null output pointer");
        }
        let name = match read_str(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Registry::builtin().get(name) {
            Some(s) => into_handle(s.clone(), out),
            None => fail(TcStatus::UnknownScenario, format!("no built-in scenario {name:?}")),
        }
    })
}

/// Replaces every random seed of the scenario.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_set_seed(scenario: *mut TcScenario, seed: u64) -> TcStatus {
    guard(|| {
        let Some(s) = scenario.as_mut() else {
            return fail(TcStatus::NullPointer, "null scenario");
        };
        s.inner = s.inner.clone().with_seed(seed);
        TcStatus::Ok
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_free(scenario: *mut TcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Tube volume at radius `r` with its error estimate.
///
/// # Safety
/// `scenario` must be a live handle; `value` and `error_estimate` valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn tc_tube_volume(
    scenario: *const TcScenario,
    r: f64,
    value: *mut f64,
    error_estimate: *mut f64,
) -> TcStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(TcStatus::NullPointer, "null scenario");
        };
        if value.is_null() || error_estimate.is_null() {
            return fail(TcStatus::NullPointer, "null output pointer");
        }
        let out =
            Context::new(&s.inner).and_then(|ctx| tube_volume_on(&ctx.mfd, &ctx.grid, r, &ctx.scenario.quadrature));
        match out {
            Ok(v) => {
                *value = v.value;
                *error_estimate = v.error_estimate;
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::ComputeFailed, e.to_string()),
        }
    })
}

/// Runs the scenario's checks and hands out the JSON report, which the
/// caller frees with `tc_string_free`. Returns `BoundFailed` with the report
/// set when any check failed or errored.
///
/// # Safety
/// `scenario` must be a live handle and `report_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_verify(scenario: *const TcScenario, report_json: *mut *mut c_char) -> TcStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(TcStatus::NullPointer, "null scenario");
        };
        if report_json.is_null() {
            return fail(TcStatus::NullPointer, "null output pointer");
        }
        let report = run_suite(&s.inner.name, std::slice::from_ref(&s.inner));
        let text = CString::new(report.to_json()).expect("json has no nul");
        *report_json = text.into_raw();
        if report.success() {
            TcStatus::Ok
        } else {
            fail(TcStatus::BoundFailed, report.human_summary())
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// sn_H(t) and cs_H(t) of the model space of curvature `h`.
///
/// # Safety
/// `sn` and `cs` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tc_sn_cs(h: f64, t: f64, sn: *mut f64, cs: *mut f64) -> TcStatus {
    guard(|| {
        if sn.is_null() || cs.is_null() {
            return fail(TcStatus::NullPointer, "null output pointer");
        }
        let (a, b) = sn_cs(ModelCurvature(h), t);
        *sn = a;
        *cs = b;
        TcStatus::Ok
    })
}

/// Integral-curvature tube bound for Σ^m in M^n.
///
/// # Safety
/// `bound` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_thm1_bound(
    n: usize,
    m: usize,
    p: f64,
    h: f64,
    vol_sigma: f64,
    deficit_norm: f64,
    r: f64,
    bound: *mut f64,
) -> TcStatus {
    guard(|| {
        if bound.is_null() {
            return fail(TcStatus::NullPointer, "null output pointer");
        }
        match thm1_constants(n, m, p, h) {
            Ok(c) => {
                *bound = thm1_bound(&c, vol_sigma, deficit_norm, r);
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Largest δ with the tube bound at radius `diameter` not above `v0`.
///
/// # Safety
/// `delta` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn tc_cheeger_delta(
    n: usize,
    m: usize,
    p: f64,
    h: f64,
    v0: f64,
    diameter: f64,
    epsilon: f64,
    delta: *mut f64,
) -> TcStatus {
    guard(|| {
        if delta.is_null() {
            return fail(TcStatus::NullPointer, "null output pointer");
        }
        match cheeger_delta(n, m, p, h, v0, diameter, epsilon) {
            Ok(d) => {
                *delta = d;
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::ComputeFailed, e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let p = tc_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn builtin_volume_matches_flat_oracle() {
        let name = CString::new("flat_t4_circle").unwrap();
        let mut h = ptr::null_mut();
        unsafe {
            assert_eq!(tc_scenario_builtin(name.as_ptr(), &mut h), TcStatus::Ok);
            let (mut v, mut e) = (0.0, 0.0);
            assert_eq!(tc_tube_volume(h, 0.5, &mut v, &mut e), TcStatus::Ok);
            let oracle = std::f64::consts::PI.powi(2) / 3.0;
            assert!((v - oracle).abs() < 1e-5 * oracle, "{v}");
            assert!(e >= 0.0);
            tc_scenario_free(h);
        }
    }

    #[test]
    fn schema_error_names_the_field() {
        let json = CString::new(
            r#"{"name":"x","manifold":{"kind":"sphere","dim":3},"submanifold":{"kind":"great_circle"},"raduis":[1]}"#,
        )
        .unwrap();
        let mut h = ptr::null_mut();
        let st = unsafe { tc_scenario_from_json(json.as_ptr(), &mut h) };
        assert_eq!(st, TcStatus::InvalidConfig);
        assert!(h.is_null());
        assert!(last_error().contains("raduis"));
    }

    #[test]
    fn null_and_unknown_arguments() {
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { tc_scenario_builtin(ptr::null(), &mut h) }, TcStatus::NullPointer);
        let name = CString::new("no_such").unwrap();
        assert_eq!(unsafe { tc_scenario_builtin(name.as_ptr(), &mut h) }, TcStatus::UnknownScenario);
        assert!(last_error().contains("no_such"));
        let (mut v, mut e) = (0.0, 0.0);
        assert_eq!(unsafe { tc_tube_volume(ptr::null(), 1.0, &mut v, &mut e) }, TcStatus::NullPointer);
        unsafe { tc_scenario_free(ptr::null_mut()) };
        unsafe { tc_string_free(ptr::null_mut()) };
    }

    #[test]
    fn verify_returns_report_and_failure_status() {
        let json = CString::new(
            r#"{"name":"hk","manifold":{"kind":"sphere","dim":3},"submanifold":{"kind":"great_circle"},
                "h":1.0,"radii":[0.5],"checks":["hk_bound"],"inflate_volume":1.1,
                "quadrature":{"base_resolution":4,"fiber":{"kind":"product","resolution":8}}}"#,
        )
        .unwrap();
        let mut h = ptr::null_mut();
        unsafe {
            let st = tc_scenario_from_json(json.as_ptr(), &mut h);
            assert_eq!(st, TcStatus::Ok, "{}", last_error());
            let mut report = ptr::null_mut();
            assert_eq!(tc_verify(h, &mut report), TcStatus::BoundFailed);
            let text = CStr::from_ptr(report).to_str().unwrap();
            assert!(text.contains("\"status\": \"fail\""));
            tc_string_free(report);
            tc_scenario_free(h);
        }
    }

    #[test]
    fn kernels() {
        let (mut sn, mut cs) = (0.0, 0.0);
        unsafe {
            assert_eq!(tc_sn_cs(1.0, 0.3, &mut sn, &mut cs), TcStatus::Ok);
        }
        assert!((sn - 0.3f64.sin()).abs() < 1e-14 && (cs - 0.3f64.cos()).abs() < 1e-14);
        let mut delta = 0.0;
        let mut bound = 0.0;
        unsafe {
            assert_eq!(tc_cheeger_delta(3, 1, 3.0, -0.1, 50.0, 1.0, 0.01, &mut delta), TcStatus::Ok);
            assert_eq!(tc_thm1_bound(3, 1, 3.0, -0.1, delta, 0.01, 1.0, &mut bound), TcStatus::Ok);
            assert_eq!(tc_thm1_bound(3, 2, 3.0, -0.1, 1.0, 0.0, 1.0, &mut bound), TcStatus::InvalidConfig);
        }
        assert!(delta > 0.0);
    }
}
