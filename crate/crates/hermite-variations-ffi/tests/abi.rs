//! Exercises the exported C ABI the way a foreign caller would: through
//! raw pointers and status codes only.

use hermite_variations_ffi::*;
use std::ptr;

#[test]
fn simulate_report_free_round_trip() {
    unsafe {
        let mut path: *mut HvPath = ptr::null_mut();
        let st = hv_path_simulate(0.8, 2, 64, 4, 42, 0, &mut path);
        assert_eq!(st, HvStatus::Ok);
        assert!(!path.is_null());

        let len = hv_path_len(path);
        assert_eq!(len, 65); // N + 1 grid points including t = 0

        let mut buf = vec![0.0f64; len];
        assert_eq!(hv_path_values(path, buf.as_mut_ptr(), len), len);
        assert_eq!(buf[0], 0.0);
        assert!(buf.iter().all(|v| v.is_finite()));
        assert!(buf.iter().any(|&v| v != 0.0));

        // a shorter buffer gets a truncated copy
        let mut short = vec![0.0f64; 3];
        assert_eq!(hv_path_values(path, short.as_mut_ptr(), 3), 3);
        assert_eq!(&short[..], &buf[..3]);

        let mut rep = HvVariationReport {
            n: 0,
            v_n: 0.0,
            s_n: 0.0,
            h_hat: 0.0,
            normalized_v_n: 0.0,
            normalized_error: 0.0,
        };
        assert_eq!(hv_path_report(path, 0.8, &mut rep), HvStatus::Ok);
        assert_eq!(rep.n, 64);
        assert!(rep.s_n > 0.0);
        // 1 + V_N = N^{2H} S_N
        let lhs = 1.0 + rep.v_n;
        let rhs = 64f64.powf(1.6) * rep.s_n;
        assert!((lhs - rhs).abs() <= 8.0 * f64::EPSILON * rhs.abs());
        assert!(rep.normalized_v_n.is_finite());
        assert!(rep.normalized_error.is_finite());

        // NaN for the true H skips the normalized statistics
        assert_eq!(hv_path_report(path, f64::NAN, &mut rep), HvStatus::Ok);
        assert!(rep.normalized_v_n.is_nan());
        assert!(rep.normalized_error.is_nan());

        hv_path_free(path);
    }
}

#[test]
fn same_seed_same_values() {
    unsafe {
        let mut a: *mut HvPath = ptr::null_mut();
        let mut b: *mut HvPath = ptr::null_mut();
        assert_eq!(hv_path_simulate(0.7, 3, 32, 2, 7, 1, &mut a), HvStatus::Ok);
        assert_eq!(hv_path_simulate(0.7, 3, 32, 2, 7, 1, &mut b), HvStatus::Ok);
        let mut va = vec![0.0f64; 33];
        let mut vb = vec![0.0f64; 33];
        hv_path_values(a, va.as_mut_ptr(), 33);
        hv_path_values(b, vb.as_mut_ptr(), 33);
        assert_eq!(va, vb);
        hv_path_free(a);
        hv_path_free(b);
    }
}

#[test]
fn error_codes_for_bad_inputs() {
    unsafe {
        let mut path: *mut HvPath = ptr::null_mut();
        assert_eq!(hv_path_simulate(1.2, 2, 16, 1, 0, 0, &mut path), HvStatus::ParamDomain);
        assert_eq!(hv_path_simulate(0.8, 0, 16, 1, 0, 0, &mut path), HvStatus::ParamDomain);
        assert_eq!(hv_path_simulate(0.8, 2, 0, 1, 0, 0, &mut path), HvStatus::ParamDomain);
        assert_eq!(
            hv_path_simulate(0.8, 2, usize::MAX / 2, 4, 0, 0, &mut path),
            HvStatus::Resource
        );
        assert!(path.is_null());

        assert_eq!(hv_path_simulate(0.8, 2, 16, 1, 0, 0, ptr::null_mut()), HvStatus::NullPointer);
        assert_eq!(hv_path_len(ptr::null()), 0);
        assert_eq!(hv_path_values(ptr::null(), ptr::null_mut(), 0), 0);
        let mut rep = HvVariationReport {
            n: 0,
            v_n: 0.0,
            s_n: 0.0,
            h_hat: 0.0,
            normalized_v_n: 0.0,
            normalized_error: 0.0,
        };
        assert_eq!(hv_path_report(ptr::null(), 0.8, &mut rep), HvStatus::NullPointer);
        hv_path_free(ptr::null_mut()); // must be a safe no-op
    }
}

#[test]
fn constants_and_domain_checks() {
    unsafe {
        let mut hp = f64::NAN;
        let mut d = f64::NAN;
        let mut c1 = f64::NAN;
        assert_eq!(hv_constants(0.8, 2, &mut hp, &mut d, &mut c1), HvStatus::Ok);
        assert_eq!(hp, 0.9);
        assert!(d > 0.0 && c1 > 0.0);
        // null outputs are skipped, not dereferenced
        assert_eq!(
            hv_constants(0.8, 2, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()),
            HvStatus::Ok
        );
        assert_eq!(
            hv_constants(0.4, 2, &mut hp, ptr::null_mut(), ptr::null_mut()),
            HvStatus::ParamDomain
        );
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hermite_variations.h"),
    )
    .expect("cbindgen header present");
    for sym in
        ["hv_path_simulate", "hv_path_len", "hv_path_values", "hv_path_report", "hv_path_free", "hv_constants", "HvStatus", "HvVariationReport"]
    {
        assert!(header.contains(sym), "header missing {sym}");
    }
}
