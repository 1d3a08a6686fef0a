//! C interface to the evcharge simulator.
//!
//! Fallible functions return an [`EvcStatus`]; results travel through out
//! pointers. On failure a description is kept per thread and can be copied
//! out with [`evc_last_error`]. Scenarios and runs are opaque handles owned by
//! the caller and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use evcharge::control::Mode;
use evcharge::dab::{self, DabParams};
use evcharge::scenario::Scenario;
use evcharge::sim::{self, SimOutput, Termination};
use evcharge::strategy::stage_currents;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Simulation = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EvcTermination {
    #[default]
    StrategyDone = 0,
    SocTarget = 1,
    TMax = 2,
    Fault = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvcMode {
    ConstantCurrent = 0,
    ConstantVoltage = 1,
    Rest = 2,
    DischargePulse = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvcMetrics {
    pub charge_time_h: f64,
    pub e_batt_loss_kwh: f64,
    pub e_conv_loss_kwh: f64,
    pub e_total_loss_kwh: f64,
    pub e_delivered_kwh: f64,
    pub final_soc: f64,
    pub terminated_by: EvcTermination,
    /// Simulated time of the fault, or -1 when the run did not fault.
    pub fault_time_s: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvcTelemetryRow {
    pub t: f64,
    pub i_batt: f64,
    pub v_term: f64,
    pub soc: f64,
    pub phi: f64,
    pub p_batt_loss: f64,
    pub p_conv_loss: f64,
    pub mode: EvcMode,
}

/// Converter parameters by value. Times in seconds, inductance in henries.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvcDabParams {
    pub v_in: f64,
    pub n: f64,
    pub leakage_l: f64,
    pub f_s: f64,
    pub dead_time: f64,
    pub phi_limit: f64,
}

impl From<EvcDabParams> for DabParams {
    fn from(p: EvcDabParams) -> Self {
        DabParams {
            v_in: p.v_in,
            n: p.n,
            leakage_l: p.leakage_l,
            f_s: p.f_s,
            dead_time: p.dead_time,
            phi_limit: p.phi_limit,
        }
    }
}

/// A validated scenario.
pub struct EvcScenario(Scenario);

/// The output of one simulation.
pub struct EvcRun(SimOutput);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(EvcStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(EvcStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(e: impl ToString) -> Self {
        Failure(EvcStatus::InvalidArgument, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EvcStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(EvcStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            EvcStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn in_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not valid UTF-8")))
}

/// Copy the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len` bytes. Returns the buffer size
/// needed for the whole message including the terminator; 1 when there is
/// no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn evc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn evc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build the built-in reference scenario.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn evc_scenario_default(out: *mut *mut EvcScenario) -> EvcStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(EvcScenario(Scenario::reference())));
        Ok(())
    })
}

/// Load and validate a TOML scenario file.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn evc_scenario_load(
    path: *const c_char,
    out: *mut *mut EvcScenario,
) -> EvcStatus {
    guard(|| {
        let path = in_str(path, "path")?;
        let out = out_ref(out, "out")?;
        let s = Scenario::load(path).map_err(|e| {
            let status = match e {
                evcharge::scenario::ScenarioError::Io { .. } => EvcStatus::Io,
                _ => EvcStatus::Config,
            };
            Failure(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(EvcScenario(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evc_scenario_free(s: *mut EvcScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Simulate a named strategy (`cccv`, `mscc` or `mscc-reflex`). A run that
/// ends in a fault still succeeds; inspect its metrics.
///
/// # Safety
/// `s` must be a live scenario handle, `strategy` a NUL-terminated string and
/// `out` valid for writes; any of them may be null, which is reported.
#[no_mangle]
pub unsafe extern "C" fn evc_run(
    s: *const EvcScenario,
    strategy: *const c_char,
    out: *mut *mut EvcRun,
) -> EvcStatus {
    guard(|| {
        let s = &in_ref(s, "scenario")?.0;
        let name = in_str(strategy, "strategy")?;
        let out = out_ref(out, "out")?;
        let strategy = s.strategy(name).map_err(Failure::invalid)?;
        let result = sim::run(&strategy, &s.pack, &s.converter, &s.control, &s.sim)
            .map_err(|e| Failure(EvcStatus::Simulation, e.to_string()))?;
        *out = Box::into_raw(Box::new(EvcRun(result)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle from [`evc_run`] that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evc_run_free(r: *mut EvcRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live run handle and `out` valid for writes, or null.
#[no_mangle]
pub unsafe extern "C" fn evc_run_metrics(r: *const EvcRun, out: *mut EvcMetrics) -> EvcStatus {
    guard(|| {
        let m = &in_ref(r, "run")?.0.metrics;
        let out = out_ref(out, "out")?;
        let (terminated_by, fault_time_s) = match m.terminated_by {
            Termination::StrategyDone => (EvcTermination::StrategyDone, -1.0),
            Termination::SocTarget => (EvcTermination::SocTarget, -1.0),
            Termination::TMax => (EvcTermination::TMax, -1.0),
            Termination::Fault { t, .. } => (EvcTermination::Fault, t),
        };
        *out = EvcMetrics {
            charge_time_h: m.charge_time_h,
            e_batt_loss_kwh: m.e_batt_loss_kwh,
            e_conv_loss_kwh: m.e_conv_loss_kwh,
            e_total_loss_kwh: m.e_total_loss_kwh,
            e_delivered_kwh: m.e_delivered_kwh,
            final_soc: m.final_soc,
            terminated_by,
            fault_time_s,
        };
        Ok(())
    })
}

/// Number of telemetry rows, 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn evc_run_telemetry_len(r: *const EvcRun) -> usize {
    r.as_ref().map_or(0, |r| r.0.telemetry.len())
}

/// # Safety
/// `r` must be a live run handle and `out` valid for writes, or null.
#[no_mangle]
pub unsafe extern "C" fn evc_run_telemetry_get(
    r: *const EvcRun,
    index: usize,
    out: *mut EvcTelemetryRow,
) -> EvcStatus {
    guard(|| {
        let rows = &in_ref(r, "run")?.0.telemetry;
        let out = out_ref(out, "out")?;
        let row = rows.get(index).ok_or_else(|| {
            Failure::invalid(format!("index {index} out of range (len {})", rows.len()))
        })?;
        *out = EvcTelemetryRow {
            t: row.t,
            i_batt: row.i_batt,
            v_term: row.v_term,
            soc: row.soc,
            phi: row.phi,
            p_batt_loss: row.p_batt_loss,
            p_conv_loss: row.p_conv_loss,
            mode: match row.mode {
                Mode::ConstantCurrent => EvcMode::ConstantCurrent,
                Mode::ConstantVoltage => EvcMode::ConstantVoltage,
                Mode::Rest => EvcMode::Rest,
                Mode::DischargePulse => EvcMode::DischargePulse,
            },
        };
        Ok(())
    })
}

/// Fill `out` with the reference converter parameters.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn evc_dab_reference(out: *mut EvcDabParams) -> EvcStatus {
    guard(|| {
        let p = DabParams::reference();
        *out_ref(out, "out")? = EvcDabParams {
            v_in: p.v_in,
            n: p.n,
            leakage_l: p.leakage_l,
            f_s: p.f_s,
            dead_time: p.dead_time,
            phi_limit: p.phi_limit,
        };
        Ok(())
    })
}

fn checked(p: &EvcDabParams) -> Result<DabParams, Failure> {
    let p = DabParams::from(*p);
    p.validate().map_err(Failure::invalid)?;
    Ok(p)
}

/// Averaged output current at phase shift `phi` (fraction of a period).
///
/// # Safety
/// `p` must be readable and `out` writable, or null.
#[no_mangle]
pub unsafe extern "C" fn evc_dab_output_current(
    p: *const EvcDabParams,
    v_out: f64,
    phi: f64,
    out: *mut f64,
) -> EvcStatus {
    guard(|| {
        let p = checked(in_ref(p, "params")?)?;
        let out = out_ref(out, "out")?;
        *out = dab::avg_output_current(&p, v_out, phi).map_err(Failure::invalid)?;
        Ok(())
    })
}

/// Largest averaged output current the converter can deliver.
///
/// # Safety
/// `p` must be readable and `out` writable, or null.
#[no_mangle]
pub unsafe extern "C" fn evc_dab_max_current(
    p: *const EvcDabParams,
    v_out: f64,
    out: *mut f64,
) -> EvcStatus {
    guard(|| {
        let p = checked(in_ref(p, "params")?)?;
        let out = out_ref(out, "out")?;
        *out = dab::max_current(&p, v_out);
        Ok(())
    })
}

/// Phase shift that produces `current`.
///
/// # Safety
/// `p` must be readable and `out` writable, or null.
#[no_mangle]
pub unsafe extern "C" fn evc_dab_phase_for_current(
    p: *const EvcDabParams,
    v_out: f64,
    current: f64,
    out: *mut f64,
) -> EvcStatus {
    guard(|| {
        let p = checked(in_ref(p, "params")?)?;
        let out = out_ref(out, "out")?;
        *out = dab::phase_for_current(&p, v_out, current).map_err(Failure::invalid)?;
        Ok(())
    })
}

/// Write the `n_stages` geometric stage currents into `out`.
///
/// # Safety
/// `out` must be null or point to `n_stages` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn evc_stage_currents(
    i_first: f64,
    i_last: f64,
    n_stages: usize,
    out: *mut f64,
) -> EvcStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let c = stage_currents(i_first, i_last, n_stages).map_err(Failure::invalid)?;
        ptr::copy_nonoverlapping(c.as_ptr(), out, c.len());
        Ok(())
    })
}
