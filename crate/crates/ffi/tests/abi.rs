use std::ffi::{c_char, CStr, CString};
use std::ptr;

use evcharge_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe { evc_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn default_scenario() -> *mut EvcScenario {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { evc_scenario_default(&mut s) }, EvcStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn run_metrics_and_telemetry() {
    let s = default_scenario();
    let name = CString::new("mscc").unwrap();
    let mut run = ptr::null_mut();
    assert_eq!(
        unsafe { evc_run(s, name.as_ptr(), &mut run) },
        EvcStatus::Ok
    );

    let mut m = EvcMetrics::default();
    assert_eq!(unsafe { evc_run_metrics(run, &mut m) }, EvcStatus::Ok);
    assert_eq!(m.terminated_by, EvcTermination::StrategyDone);
    assert_eq!(m.fault_time_s, -1.0);
    assert!(m.charge_time_h > 1.0 && m.charge_time_h < 2.0);
    assert_eq!(m.e_total_loss_kwh, m.e_batt_loss_kwh + m.e_conv_loss_kwh);

    let len = unsafe { evc_run_telemetry_len(run) };
    assert!(len > 2);
    let mut first = std::mem::MaybeUninit::<EvcTelemetryRow>::uninit();
    assert_eq!(
        unsafe { evc_run_telemetry_get(run, 0, first.as_mut_ptr()) },
        EvcStatus::Ok
    );
    let first = unsafe { first.assume_init() };
    assert_eq!(first.t, 0.0);
    assert_eq!(first.mode, EvcMode::ConstantCurrent);
    assert!((first.i_batt - 56.0).abs() < 1e-9);
    let mut last = first;
    assert_eq!(
        unsafe { evc_run_telemetry_get(run, len - 1, &mut last) },
        EvcStatus::Ok
    );
    assert_eq!(last.soc, m.final_soc);
    assert_eq!(
        unsafe { evc_run_telemetry_get(run, len, &mut last) },
        EvcStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    unsafe {
        evc_run_free(run);
        evc_scenario_free(s);
    }
}

#[test]
fn null_and_bad_arguments_are_reported() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { evc_scenario_default(ptr::null_mut()) },
        EvcStatus::NullPointer
    );
    assert_eq!(
        unsafe { evc_scenario_load(ptr::null(), &mut s) },
        EvcStatus::NullPointer
    );
    assert!(last_error().contains("path"));

    let missing = CString::new("/nonexistent/scenario.toml").unwrap();
    assert_eq!(
        unsafe { evc_scenario_load(missing.as_ptr(), &mut s) },
        EvcStatus::Io
    );
    assert!(s.is_null());

    let dir = std::env::temp_dir().join(format!("evc-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[battery]\ncapacity_ah = 1\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { evc_scenario_load(bad.as_ptr(), &mut s) },
        EvcStatus::Config
    );
    std::fs::remove_dir_all(&dir).unwrap();

    let sc = default_scenario();
    let name = CString::new("trickle").unwrap();
    let mut run = ptr::null_mut();
    assert_eq!(
        unsafe { evc_run(sc, name.as_ptr(), &mut run) },
        EvcStatus::InvalidArgument
    );
    assert!(last_error().contains("trickle"));
    assert_eq!(
        unsafe { evc_run(ptr::null(), name.as_ptr(), &mut run) },
        EvcStatus::NullPointer
    );
    assert_eq!(unsafe { evc_run_telemetry_len(ptr::null()) }, 0);
    unsafe {
        evc_scenario_free(sc);
        evc_scenario_free(ptr::null_mut());
        evc_run_free(ptr::null_mut());
    }
}

#[test]
fn scenario_file_loads() {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/reference.toml"
    );
    let path = CString::new(path).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { evc_scenario_load(path.as_ptr(), &mut s) },
        EvcStatus::Ok,
        "{}",
        last_error()
    );
    unsafe { evc_scenario_free(s) };
}

#[test]
fn converter_functions() {
    let mut p = EvcDabParams {
        v_in: 0.0,
        n: 0.0,
        leakage_l: 0.0,
        f_s: 0.0,
        dead_time: 0.0,
        phi_limit: 0.0,
    };
    assert_eq!(unsafe { evc_dab_reference(&mut p) }, EvcStatus::Ok);
    assert_eq!(p.v_in, 200.0);

    let mut i = 0.0;
    assert_eq!(
        unsafe { evc_dab_output_current(&p, 150.0, 0.25, &mut i) },
        EvcStatus::Ok
    );
    assert!((i - 62.5).abs() < 1e-9);
    let mut max = 0.0;
    assert_eq!(
        unsafe { evc_dab_max_current(&p, 150.0, &mut max) },
        EvcStatus::Ok
    );
    assert_eq!(max, i);
    let mut phi = 0.0;
    assert_eq!(
        unsafe { evc_dab_phase_for_current(&p, 150.0, 30.0, &mut phi) },
        EvcStatus::Ok
    );
    assert_eq!(
        unsafe { evc_dab_output_current(&p, 150.0, phi, &mut i) },
        EvcStatus::Ok
    );
    assert!((i - 30.0).abs() < 1e-9);

    assert_eq!(
        unsafe { evc_dab_output_current(&p, 150.0, 0.3, &mut i) },
        EvcStatus::InvalidArgument
    );
    assert!(last_error().contains("0.3"));
    let broken = EvcDabParams { f_s: -1.0, ..p };
    assert_eq!(
        unsafe { evc_dab_max_current(&broken, 150.0, &mut max) },
        EvcStatus::InvalidArgument
    );
    assert!(last_error().contains("f_s"));
}

#[test]
fn stage_currents_fill_the_buffer() {
    let mut c = [0.0; 3];
    assert_eq!(
        unsafe { evc_stage_currents(40.0, 10.0, 3, c.as_mut_ptr()) },
        EvcStatus::Ok
    );
    assert_eq!(c, [40.0, 20.0, 10.0]);
    assert_eq!(
        unsafe { evc_stage_currents(10.0, 40.0, 3, c.as_mut_ptr()) },
        EvcStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { evc_stage_currents(40.0, 10.0, 3, ptr::null_mut()) },
        EvcStatus::NullPointer
    );
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(evc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
