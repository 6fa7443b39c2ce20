use std::ffi::{c_int, CStr};
use std::ptr;

use isosoliton_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        iso_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn params(k: u32, n: u32, m1: u32, m2: u32) -> *mut IsoParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { iso_params_new(k, n, m1, m2, &mut p) }, IsoStatus::Ok);
    p
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(iso_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn invalid_params_set_status_and_message() {
    let mut p = ptr::NonNull::<IsoParams>::dangling().as_ptr();
    let s = unsafe { iso_params_new(5, 4, 1, 1, &mut p) };
    assert_eq!(s, IsoStatus::InvalidParams);
    assert!(p.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { iso_params_new(1, 2, 1, 1, ptr::null_mut()) }, IsoStatus::NullPointer);
    let mut r = 0.0;
    assert_eq!(unsafe { iso_params_r(ptr::null(), &mut r) }, IsoStatus::NullPointer);
    assert!(last_error().contains("params"));
    assert_eq!(unsafe { iso_trace_len(ptr::null()) }, 0);
    unsafe {
        iso_params_free(ptr::null_mut());
        iso_trace_free(ptr::null_mut());
    }
}

#[test]
fn scalar_queries() {
    let p = params(2, 4, 1, 2);
    let (mut r, mut rhs, mut sign, mut vp) = (0.0, 0.0, 9 as c_int, 0.0);
    unsafe {
        assert_eq!(iso_params_r(p, &mut r), IsoStatus::Ok);
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iso_psi_rhs(p, 0.0, 0.0, &mut rhs), IsoStatus::Ok);
        assert!((rhs - 0.5).abs() < 1e-15);
        assert_eq!(iso_psi_rhs(p, 1.0, 0.0, &mut rhs), IsoStatus::Singular);
        assert_eq!(iso_sign_region(p, 0.0, 0.0, &mut sign), IsoStatus::Ok);
        assert_eq!(sign, 1);
        assert_eq!(iso_endpoint_vprime(p, -1, &mut vp), IsoStatus::Ok);
        // 1 / (k (k + (n - 1)(1 + R)))
        assert!((vp - 1.0 / (2.0 * (2.0 + 3.0 * (4.0 / 3.0)))).abs() < 1e-15);
        assert_eq!(iso_endpoint_vprime(p, 0, &mut vp), IsoStatus::Domain);
        iso_params_free(p);
    }
}

#[test]
fn trace_round_trip_and_classification() {
    let p = params(1, 2, 1, 1);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(iso_trace_new(p, 0.0, 0.0, 0.0, &mut t), IsoStatus::Ok);
        let n = iso_trace_len(t);
        assert!(n > 10);
        let mut r = vec![0.0; n];
        let mut psi = vec![0.0; n];
        assert_eq!(
            iso_trace_samples(t, r.as_mut_ptr(), psi.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n - 1),
            IsoStatus::BufferTooSmall
        );
        assert_eq!(
            iso_trace_samples(t, r.as_mut_ptr(), psi.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n),
            IsoStatus::Ok
        );
        assert!(r.windows(2).all(|w| w[0] < w[1]));

        let (mut kind, mut loc) = (IsoEventKind::BudgetExhausted, 0.0);
        assert_eq!(iso_trace_event(t, -1, &mut kind, &mut loc), IsoStatus::Ok);
        assert_eq!(kind, IsoEventKind::BlowUpMinus);
        assert_eq!(iso_trace_event(t, 1, &mut kind, &mut loc), IsoStatus::Ok);
        assert_eq!(kind, IsoEventKind::BlowUpPlus);
        assert!(loc > 0.0 && loc < 1.0);

        let mut at = 1.0;
        assert_eq!(iso_trace_psi_at(t, 0.0, &mut at), IsoStatus::Ok);
        assert!(at.abs() < 1e-12);
        assert_eq!(iso_trace_psi_at(t, 0.9999999, &mut at), IsoStatus::Domain);

        let mut ty: c_int = -1;
        assert_eq!(iso_trace_classify(t, 0.0, &mut ty), IsoStatus::Ok);
        assert!((1..=5).contains(&ty));
        iso_trace_free(t);

        assert_eq!(iso_trace_from_endpoint(p, -1, 0.0, &mut t), IsoStatus::Ok);
        assert_eq!(iso_trace_classify(t, 0.0, &mut ty), IsoStatus::Ok);
        assert_eq!(ty, 6);
        iso_trace_free(t);
        assert_eq!(iso_trace_from_endpoint(p, 1, 0.0, &mut t), IsoStatus::Ok);
        assert_eq!(iso_trace_classify(t, 0.0, &mut ty), IsoStatus::Ok);
        assert_eq!(ty, 7);
        iso_trace_free(t);
        iso_params_free(p);
    }
}

#[test]
fn bad_tolerance_is_reported() {
    let p = params(1, 2, 1, 1);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(iso_trace_new(p, 0.0, 0.0, -1e-8, &mut t), IsoStatus::Domain);
        assert!(last_error().contains("tol"));
        assert_eq!(iso_trace_new(p, 0.0, 0.0, f64::NAN, &mut t), IsoStatus::Domain);
        assert!(t.is_null());
        assert_eq!(iso_trace_new(p, 1.5, 0.0, 0.0, &mut t), IsoStatus::Domain);
        iso_params_free(p);
    }
}
