//! C ABI for path simulation and variation statistics.
//!
//! All functions return an `HvStatus` code; outputs go through pointers.
//! Handles are opaque and must be released with the matching `_free`.

use hermite_variations::params::derive_params;
use hermite_variations::rng::RandomStream;
use hermite_variations::simulator::{simulate_path, HermitePath};
use hermite_variations::variation::variation_report;
use hermite_variations::HvError;
use std::os::raw::c_double;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvStatus {
    Ok = 0,
    NullPointer = 1,
    ParamDomain = 2,
    Regime = 3,
    Range = 4,
    Numerical = 5,
    Degenerate = 6,
    Resource = 7,
    Internal = 8,
}

fn status_of(e: &HvError) -> HvStatus {
    match e {
        HvError::ParamDomain(_) => HvStatus::ParamDomain,
        HvError::Regime(_) => HvStatus::Regime,
        HvError::Range(_) => HvStatus::Range,
        HvError::Embedding { .. } | HvError::Factorization { .. } | HvError::Quadrature(_) => {
            HvStatus::Numerical
        }
        HvError::Degenerate(_) => HvStatus::Degenerate,
        HvError::Resource(_) => HvStatus::Resource,
        _ => HvStatus::Internal,
    }
}

/// Opaque simulated-path handle.
pub struct HvPath {
    inner: HermitePath,
}

/// Statistics of one path, mirroring the native variation report.
/// `normalized_v_n` and `normalized_error` are NaN outside the
/// Rosenblatt regime.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HvVariationReport {
    pub n: u64,
    pub v_n: c_double,
    pub s_n: c_double,
    pub h_hat: c_double,
    pub normalized_v_n: c_double,
    pub normalized_error: c_double,
}

/// Simulate a Hermite path of `n` observations with oversampling `m`.
/// On success writes a handle to `out` and returns `Ok`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hv_path_simulate(
    h: c_double,
    q: u32,
    n: usize,
    m: usize,
    seed: u64,
    stream_index: u64,
    out: *mut *mut HvPath,
) -> HvStatus {
    if out.is_null() {
        return HvStatus::NullPointer;
    }
    let params = match derive_params(h, q) {
        Ok(p) => p,
        Err(e) => return status_of(&e),
    };
    match simulate_path(&params, n, m, RandomStream::new(seed, stream_index)) {
        Ok(path) => {
            *out = Box::into_raw(Box::new(HvPath { inner: path }));
            HvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Number of observations in the path.
///
/// # Safety
/// `path` must come from `hv_path_simulate` and not be freed.
#[no_mangle]
pub unsafe extern "C" fn hv_path_len(path: *const HvPath) -> usize {
    if path.is_null() {
        return 0;
    }
    (*path).inner.values.len()
}

/// Copy the path values into `buf` (capacity `len`); returns the number
/// of values written.
///
/// # Safety
/// `buf` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hv_path_values(
    path: *const HvPath,
    buf: *mut c_double,
    len: usize,
) -> usize {
    if path.is_null() || buf.is_null() {
        return 0;
    }
    let values = &(*path).inner.values;
    let n = values.len().min(len);
    std::ptr::copy_nonoverlapping(values.as_ptr(), buf, n);
    n
}

/// Variation statistics of the path. Pass the true `h` used at
/// simulation time to get normalized statistics, or NaN to skip them.
///
/// # Safety
/// `path` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hv_path_report(
    path: *const HvPath,
    true_h: c_double,
    out: *mut HvVariationReport,
) -> HvStatus {
    if path.is_null() || out.is_null() {
        return HvStatus::NullPointer;
    }
    let true_h = if true_h.is_nan() { None } else { Some(true_h) };
    match variation_report(&(*path).inner, true_h) {
        Ok(r) => {
            *out = HvVariationReport {
                n: r.n as u64,
                v_n: r.v_n,
                s_n: r.s_n,
                h_hat: r.h_hat,
                normalized_v_n: r.normalized_v_n.unwrap_or(f64::NAN),
                normalized_error: r.normalized_error.unwrap_or(f64::NAN),
            };
            HvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Release a path handle. A null pointer is a no-op.
///
/// # Safety
/// `path` must come from `hv_path_simulate` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hv_path_free(path: *mut HvPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Derived parameters: writes h' and the dominant-term variance constant
/// (NaN when 4h' - 3 <= 0) to the output pointers.
///
/// # Safety
/// Non-null output pointers must be valid; nulls are skipped.
#[no_mangle]
pub unsafe extern "C" fn hv_constants(
    h: c_double,
    q: u32,
    h_prime: *mut c_double,
    d: *mut c_double,
    c1: *mut c_double,
) -> HvStatus {
    let params = match derive_params(h, q) {
        Ok(p) => p,
        Err(e) => return status_of(&e),
    };
    if !h_prime.is_null() {
        *h_prime = params.h_prime;
    }
    if !d.is_null() {
        *d = hermite_variations::params::d_constant(&params);
    }
    if !c1.is_null() {
        *c1 = hermite_variations::params::c1_constant(&params).unwrap_or(f64::NAN);
    }
    HvStatus::Ok
}
