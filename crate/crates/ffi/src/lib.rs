//! C ABI for `ias-core`.
//!
//! Every fallible call returns an [`IasStatus`]. On failure the message is
//! kept per thread and can be fetched with [`ias_last_error_message`]; strings
//! handed out by this library are released with [`ias_string_free`]. Handles
//! are opaque and each has its own `_free` function, which accepts null.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ias_core::estimator::{self, EstimateRecord, ProcessingOptions, WindowKind};
use ias_core::model::{self, BareModes, Branch, FitOptions, SpectroscopyData, SpectroscopyPoint};
use ias_core::scenario::Scenario;
use ias_core::sensing::{self, ChargeModel};
use ias_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Precondition = 4,
    UnderDetermined = 5,
    FitNotConverged = 6,
    NoPeak = 7,
    Parse = 8,
    Io = 9,
    Simulation = 10,
    Panic = 11,
}

impl From<&Error> for IasStatus {
    fn from(e: &Error) -> Self {
        match e.root() {
            Error::Domain(_) => IasStatus::InvalidArgument,
            Error::Config(_) => IasStatus::Config,
            Error::Precondition(_) | Error::UndefinedVisibility(_) => IasStatus::Precondition,
            Error::UnderDetermined(_) => IasStatus::UnderDetermined,
            Error::FitNotConverged { .. } => IasStatus::FitNotConverged,
            Error::NoPeak(_) => IasStatus::NoPeak,
            Error::Parse { .. } | Error::Json(_) => IasStatus::Parse,
            Error::Io(_) => IasStatus::Io,
            _ => IasStatus::Simulation,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: IasStatus, msg: impl Into<String>) -> IasStatus {
    set_last_error(msg);
    status
}

fn fail_with(e: &Error) -> IasStatus {
    fail(IasStatus::from(e), e.to_string())
}

/// Runs `f`, converting panics into [`IasStatus::Panic`].
fn guard(f: impl FnOnce() -> IasStatus) -> IasStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(IasStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(IasStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, IasStatus> {
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(IasStatus::InvalidArgument, "string is not valid UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn ias_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or null if the last call
/// succeeded. Release with [`ias_string_free`].
#[no_mangle]
pub extern "C" fn ias_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ias_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Normal-mode angular frequencies (ω₊, ω₋) of two coupled oscillators with
/// bare frequencies `omega1`, `omega2` and coupling `omega_kappa`, all rad/s.
///
/// # Safety
/// `plus` and `minus` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ias_normal_mode_frequencies(
    omega1: f64,
    omega2: f64,
    omega_kappa: f64,
    plus: *mut f64,
    minus: *mut f64,
) -> IasStatus {
    guard(|| {
        non_null!(plus, minus);
        match model::normal_mode_frequencies(&BareModes::new(omega1, omega2, omega_kappa)) {
            Ok((p, m)) => {
                *plus = p;
                *minus = m;
                IasStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Geometry and sensitivity for the charge conversions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IasChargeModel {
    /// Splitting shift per charge density, Hz per C/m³.
    pub slope: f64,
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub elementary_charge: f64,
    pub baseline_splitting_hz: f64,
}

impl From<IasChargeModel> for ChargeModel {
    fn from(m: IasChargeModel) -> Self {
        ChargeModel {
            slope: m.slope,
            length: m.length,
            width: m.width,
            thickness: m.thickness,
            elementary_charge: m.elementary_charge,
            baseline_splitting_hz: m.baseline_splitting_hz,
        }
    }
}

#[no_mangle]
pub extern "C" fn ias_charge_model_default() -> IasChargeModel {
    let m = ChargeModel::default();
    IasChargeModel {
        slope: m.slope,
        length: m.length,
        width: m.width,
        thickness: m.thickness,
        elementary_charge: m.elementary_charge,
        baseline_splitting_hz: m.baseline_splitting_hz,
    }
}

/// Charge density (C/m³) and electron count equivalent to a splitting shift.
///
/// # Safety
/// `model` must be readable; `density` and `electrons` writable.
#[no_mangle]
pub unsafe extern "C" fn ias_shift_to_charge(
    model: *const IasChargeModel,
    shift_hz: f64,
    density: *mut f64,
    electrons: *mut f64,
) -> IasStatus {
    guard(|| {
        non_null!(model, density, electrons);
        let m = ChargeModel::from(*model);
        if let Err(e) = m.validate() {
            return fail_with(&e);
        }
        let rho = sensing::shift_to_charge_density(shift_hz, &m);
        *density = rho;
        *electrons = sensing::density_to_electrons(rho, &m);
        IasStatus::Ok
    })
}

/// Single-tone frequency estimate in Hz of `len` samples spaced `dt` seconds
/// and spanning `fringes` periods. With `windowed` false no window is applied.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out_hz` be writable.
#[no_mangle]
pub unsafe extern "C" fn ias_estimate_frequency(
    values: *const f64,
    len: usize,
    dt: f64,
    fringes: usize,
    windowed: bool,
    pad_factor: usize,
    out_hz: *mut f64,
) -> IasStatus {
    guard(|| {
        non_null!(values, out_hz);
        let data = std::slice::from_raw_parts(values, len);
        let opts = ProcessingOptions {
            window: if windowed { WindowKind::Hann } else { WindowKind::None },
            pad_factor,
            ..ProcessingOptions::default()
        };
        let run = || -> ias_core::Result<f64> {
            opts.validate()?;
            let p = estimator::preprocess(data, dt, fringes, &opts)?;
            Ok(estimator::estimate_frequency(&p, &opts)?.0)
        };
        match run() {
            Ok(f) => {
                *out_hz = f;
                IasStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Avoided-crossing spectroscopy points.
pub struct IasSpectroscopy {
    data: SpectroscopyData,
}

#[no_mangle]
pub extern "C" fn ias_spectroscopy_new() -> *mut IasSpectroscopy {
    Box::into_raw(Box::new(IasSpectroscopy {
        data: SpectroscopyData { points: Vec::new() },
    }))
}

/// Loads points from a CSV file with columns voltage_V,frequency_Hz[,branch].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ias_spectroscopy_from_csv(
    path: *const c_char,
    out: *mut *mut IasSpectroscopy,
) -> IasStatus {
    guard(|| {
        non_null!(path, out);
        *out = ptr::null_mut();
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match SpectroscopyData::from_csv_path(path) {
            Ok(data) => {
                *out = Box::into_raw(Box::new(IasSpectroscopy { data }));
                IasStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Appends a point. `branch` is 1 for the upper branch, -1 for the lower one
/// and 0 when unassigned.
///
/// # Safety
/// `handle` must come from this library and not be freed.
#[no_mangle]
pub unsafe extern "C" fn ias_spectroscopy_push(
    handle: *mut IasSpectroscopy,
    voltage: f64,
    frequency_hz: f64,
    branch: i32,
) -> IasStatus {
    guard(|| {
        non_null!(handle);
        let branch = match branch {
            1 => Branch::Upper,
            -1 => Branch::Lower,
            0 => Branch::Unassigned,
            b => return fail(IasStatus::InvalidArgument, format!("unknown branch code {b}")),
        };
        if !(voltage.is_finite() && frequency_hz.is_finite()) {
            return fail(IasStatus::InvalidArgument, "point must be finite");
        }
        (*handle).data.points.push(SpectroscopyPoint {
            voltage,
            frequency_hz,
            branch,
        });
        IasStatus::Ok
    })
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ias_spectroscopy_len(handle: *const IasSpectroscopy) -> usize {
    handle.as_ref().map_or(0, |h| h.data.len())
}

/// # Safety
/// `handle` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ias_spectroscopy_free(handle: *mut IasSpectroscopy) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IasFitSummary {
    pub splitting_hz: f64,
    pub splitting_sigma_hz: f64,
    pub crossing_voltage: f64,
    pub rms_residual_hz: f64,
    pub points_used: usize,
    pub converged: bool,
}

/// Fits the avoided-crossing model starting from the reference tuning.
/// When the fit does not converge the best point found is still written to
/// `out` and [`IasStatus::FitNotConverged`] is returned.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ias_fit_avoided_crossing(
    handle: *const IasSpectroscopy,
    out: *mut IasFitSummary,
) -> IasStatus {
    guard(|| {
        non_null!(handle, out);
        let summary = |o: &model::FitOutcome| IasFitSummary {
            splitting_hz: o.report.splitting_hz,
            splitting_sigma_hz: o.report.splitting_sigma_hz,
            crossing_voltage: o.report.crossing_voltage,
            rms_residual_hz: o.report.rms_residual_hz,
            points_used: o.report.points_used,
            converged: o.report.converged,
        };
        match model::fit_avoided_crossing(&(*handle).data, &model::reference_tuning(), &FitOptions::default()) {
            Ok(o) => {
                *out = summary(&o);
                IasStatus::Ok
            }
            Err(e) => {
                if let Error::FitNotConverged { best, .. } = &e {
                    *out = summary(best);
                }
                fail_with(&e)
            }
        }
    })
}

/// Parsed and validated scenario.
pub struct IasScenario {
    scenario: Scenario,
}

fn scenario_handle(s: ias_core::Result<Scenario>, out: *mut *mut IasScenario) -> IasStatus {
    match s.and_then(|s| s.validate().map(|_| s)) {
        Ok(scenario) => {
            unsafe { *out = Box::into_raw(Box::new(IasScenario { scenario })) };
            IasStatus::Ok
        }
        Err(e) => fail_with(&e),
    }
}

/// Parses a TOML scenario document.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ias_scenario_from_str(toml: *const c_char, out: *mut *mut IasScenario) -> IasStatus {
    guard(|| {
        non_null!(toml, out);
        *out = ptr::null_mut();
        match read_str(toml) {
            Ok(src) => scenario_handle(Scenario::from_toml_str(src), out),
            Err(s) => s,
        }
    })
}

/// Reads a TOML scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ias_scenario_from_file(path: *const c_char, out: *mut *mut IasScenario) -> IasStatus {
    guard(|| {
        non_null!(path, out);
        *out = ptr::null_mut();
        match read_str(path) {
            Ok(p) => scenario_handle(Scenario::from_path(p.as_ref()), out),
            Err(s) => s,
        }
    })
}

/// # Safety
/// `handle` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ias_scenario_set_seed(handle: *mut IasScenario, seed: u64) -> IasStatus {
    guard(|| {
        non_null!(handle);
        (*handle).scenario.seed = seed;
        IasStatus::Ok
    })
}

/// # Safety
/// `handle` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ias_scenario_set_repeats(handle: *mut IasScenario, repeats: usize) -> IasStatus {
    guard(|| {
        non_null!(handle);
        if repeats == 0 {
            return fail(IasStatus::Config, "repeats must be at least 1");
        }
        (*handle).scenario.system.repeats = repeats;
        IasStatus::Ok
    })
}

/// # Safety
/// `handle` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ias_scenario_set_max_iter(handle: *mut IasScenario, max_iter: usize) -> IasStatus {
    guard(|| {
        non_null!(handle);
        (*handle).scenario.ias.max_iter = max_iter;
        IasStatus::Ok
    })
}

/// # Safety
/// `handle` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ias_scenario_free(handle: *mut IasScenario) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Records of one adaptive run; on failure, the iterations completed before it.
pub struct IasRunResult {
    records: Vec<EstimateRecord>,
}

/// One iteration of an adaptive run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IasEstimate {
    pub iteration: usize,
    pub prior_hz: f64,
    pub estimate_hz: f64,
    pub uncertainty_hz: f64,
    /// NaN when the unwindowed spectrum had no peak.
    pub unprocessed_hz: f64,
    pub fringes: usize,
    pub processed: bool,
    pub converged: bool,
    pub padded_bin_hz: f64,
}

/// Runs the adaptive loop of a scenario. `out` receives a result handle even
/// when a later iteration fails, holding the completed iterations.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ias_run_ias(scenario: *const IasScenario, out: *mut *mut IasRunResult) -> IasStatus {
    guard(|| {
        non_null!(scenario, out);
        *out = ptr::null_mut();
        let s = &(*scenario).scenario;
        let template = match s.validate().and_then(|_| s.ramsey_config()) {
            Ok(t) => t,
            Err(e) => return fail_with(&e),
        };
        let (records, status) = match estimator::ias_run(template.prior, &template, &s.ias_settings(), s.seed) {
            Ok(r) => (r, IasStatus::Ok),
            Err(e) => {
                let status = fail_with(&e);
                match e {
                    Error::IasRun { partial, .. } => (partial, status),
                    _ => return status,
                }
            }
        };
        *out = Box::into_raw(Box::new(IasRunResult { records }));
        status
    })
}

/// Number of iterations; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ias_run_result_len(result: *const IasRunResult) -> usize {
    result.as_ref().map_or(0, |r| r.records.len())
}

/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ias_run_result_get(
    result: *const IasRunResult,
    index: usize,
    out: *mut IasEstimate,
) -> IasStatus {
    guard(|| {
        non_null!(result, out);
        let Some(r) = (&(*result).records).get(index) else {
            return fail(IasStatus::InvalidArgument, format!("iteration index {index} out of range"));
        };
        *out = IasEstimate {
            iteration: r.iteration,
            prior_hz: r.prior / std::f64::consts::TAU,
            estimate_hz: r.estimate_hz(),
            uncertainty_hz: r.uncertainty_hz(),
            unprocessed_hz: r.unprocessed_estimate.map_or(f64::NAN, |v| v / std::f64::consts::TAU),
            fringes: r.fringes,
            processed: r.processed,
            converged: r.converged,
            padded_bin_hz: r.padded_bin_hz,
        };
        IasStatus::Ok
    })
}

/// Full records as JSON, or null on failure. Release with [`ias_string_free`].
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ias_run_result_to_json(result: *const IasRunResult) -> *mut c_char {
    let mut json = ptr::null_mut();
    guard(|| {
        non_null!(result);
        match serde_json::to_string(&(*result).records) {
            Ok(s) => {
                json = into_c_string(s);
                IasStatus::Ok
            }
            Err(e) => fail(IasStatus::Simulation, e.to_string()),
        }
    });
    json
}

/// # Safety
/// `result` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ias_run_result_free(result: *mut IasRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
