use std::ffi::{c_char, CStr, CString};
use std::ptr;

use sbn::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        sbn_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

struct Handle(*mut SbnSimulation);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { sbn_simulation_free(self.0) }
    }
}

fn field(sim: *const SbnSimulation, f: SbnField) -> Vec<f64> {
    let mut len = 0usize;
    unsafe {
        assert_eq!(sbn_simulation_field_len(sim, f, &mut len), SbnStatus::Ok);
        let mut v = vec![f64::NAN; len];
        assert_eq!(sbn_simulation_field_copy(sim, f, v.as_mut_ptr(), len), SbnStatus::Ok);
        v
    }
}

#[test]
fn coefficients_follow_the_closed_form() {
    let mut c = SbnPseudoCoefficients::default();
    let (lambda, s0, alpha) = (4.28e6, 5e-6, 1.0);
    assert_eq!(unsafe { sbn_pseudo_coefficients(lambda, s0, alpha, &mut c) }, SbnStatus::Ok);
    let d = alpha * alpha + lambda * s0;
    assert!((c.k1 - alpha / d).abs() <= 1e-15 * c.k1);
    assert!((c.k2 - lambda / d).abs() <= 1e-15 * c.k2);
    assert!((c.k3 - s0 / d).abs() <= 1e-15 * c.k3);
    assert_eq!(unsafe { sbn_pseudo_coefficients(0.0, 0.0, 0.0, &mut c) }, SbnStatus::InvalidArgument);
    assert!(last_error().contains("degenerate"));
    assert_eq!(unsafe { sbn_pseudo_coefficients(1.0, 1.0, 1.0, ptr::null_mut()) }, SbnStatus::NullPointer);
}

#[test]
fn handles_step_and_expose_fields() {
    let mut raw = ptr::null_mut();
    assert_eq!(unsafe { sbn_simulation_new_test1(2, SbnIntegrator::Decoupled, 1e-4, &mut raw) }, SbnStatus::Ok);
    let h = Handle(raw);
    assert_eq!(unsafe { sbn_simulation_step(h.0, 3) }, SbnStatus::Ok);
    let (mut t, mut n, mut e) = (0.0, 0u64, -1.0);
    unsafe {
        assert_eq!(sbn_simulation_time(h.0, &mut t, &mut n), SbnStatus::Ok);
        assert_eq!(sbn_simulation_energy(h.0, &mut e), SbnStatus::Ok);
    }
    assert_eq!(n, 3);
    assert!((t - 3e-4).abs() < 1e-18);
    assert!(e > 0.0 && e.is_finite());

    let mut c = SbnPseudoCoefficients::default();
    unsafe { sbn_pseudo_coefficients(4.28e6, 5e-6, 1.0, &mut c) };
    let (xi, eta, pp) = (field(h.0, SbnField::Xi), field(h.0, SbnField::Eta), field(h.0, SbnField::PorePressure));
    for i in 0..pp.len() {
        let want = c.k1 * xi[i] + c.k2 * eta[i];
        assert!((pp[i] - want).abs() <= 1e-12 * want.abs().max(1e-300));
    }
    assert_eq!(field(h.0, SbnField::Velocity).len() % 2, 0);

    let mut short = [0.0; 1];
    assert_eq!(unsafe { sbn_simulation_field_copy(h.0, SbnField::Xi, short.as_mut_ptr(), 1) }, SbnStatus::InvalidArgument);
}

#[test]
fn both_integrators_are_reachable() {
    for integ in [SbnIntegrator::Decoupled, SbnIntegrator::Monolithic] {
        let mut raw = ptr::null_mut();
        assert_eq!(unsafe { sbn_simulation_new_test1(1, integ, 1e-4, &mut raw) }, SbnStatus::Ok);
        let h = Handle(raw);
        assert_eq!(unsafe { sbn_simulation_step(h.0, 1) }, SbnStatus::Ok);
        assert!(field(h.0, SbnField::Displacement).iter().all(|x| x.is_finite()));
    }
}

#[test]
fn bad_inputs_map_to_status_codes() {
    let mut raw = ptr::null_mut();
    unsafe {
        assert_eq!(sbn_simulation_new_test1(2, SbnIntegrator::Decoupled, 0.0, &mut raw), SbnStatus::InvalidArgument);
        assert!(raw.is_null());
        assert_eq!(sbn_simulation_new_test1(0, SbnIntegrator::Decoupled, 1e-4, &mut raw), SbnStatus::InvalidArgument);
        assert_eq!(sbn_simulation_step(ptr::null_mut(), 1), SbnStatus::NullPointer);
        assert_eq!(sbn_simulation_from_config(ptr::null(), &mut raw), SbnStatus::NullPointer);
        let missing = CString::new("/nonexistent/run.ini").unwrap();
        assert_eq!(sbn_simulation_from_config(missing.as_ptr(), &mut raw), SbnStatus::Io);
        sbn_simulation_free(ptr::null_mut());
    }
}

#[test]
fn config_files_build_handles_and_report_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("run.ini");
    std::fs::write(&good, "[mesh]\nscenario = test1\nnx = 1\nny = 1\n[time]\ndt = 2e-4\nt_final = 1e-3\n").unwrap();
    let bad = dir.path().join("bad.ini");
    std::fs::write(&bad, "[time]\ndelta = 1\n").unwrap();
    let mut raw = ptr::null_mut();
    unsafe {
        let p = CString::new(good.to_str().unwrap()).unwrap();
        assert_eq!(sbn_simulation_from_config(p.as_ptr(), &mut raw), SbnStatus::Ok);
        let h = Handle(raw);
        assert_eq!(sbn_simulation_step(h.0, 2), SbnStatus::Ok);
        let (mut t, mut n) = (0.0, 0u64);
        sbn_simulation_time(h.0, &mut t, &mut n);
        assert!((t - 4e-4).abs() < 1e-18);

        let p = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(sbn_simulation_from_config(p.as_ptr(), &mut raw), SbnStatus::Parse);
        assert!(last_error().contains("bad.ini:2"), "{}", last_error());
    }
}

#[test]
fn error_messages_truncate_safely() {
    unsafe {
        sbn_simulation_step(ptr::null_mut(), 1);
        let full = sbn_last_error_message(ptr::null_mut(), 0);
        let mut buf = [1 as c_char; 5];
        assert_eq!(sbn_last_error_message(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(buf[4], 0);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 4);
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(sbn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sbn.h")).unwrap();
    for name in [
        "sbn_pseudo_coefficients",
        "sbn_simulation_new_test1",
        "sbn_simulation_from_config",
        "sbn_simulation_free",
        "sbn_simulation_step",
        "sbn_simulation_time",
        "sbn_simulation_energy",
        "sbn_simulation_field_len",
        "sbn_simulation_field_copy",
        "sbn_last_error_message",
        "sbn_version",
        "typedef struct SbnSimulation SbnSimulation",
    ] {
        assert!(h.contains(name), "{name}");
    }
}
