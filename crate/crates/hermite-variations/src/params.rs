use crate::error::{HvError, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Parameter bundle for a Hermite process of order q with Hurst index H.
/// h_prime is the Hurst index of the driving Gaussian noise, h_second the
/// self-similarity index of the second-order limit law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstParams {
    pub h: f64,
    pub q: u32,
    pub h_prime: f64,
    pub h_second: f64,
}

pub fn derive_params(h: f64, q: u32) -> Result<HurstParams> {
    if !(h > 0.5 && h < 1.0) {
        return Err(HvError::ParamDomain(format!("H must be in (1/2,1), got {h}")));
    }
    if q < 1 {
        return Err(HvError::ParamDomain(format!("q must be >= 1, got {q}")));
    }
    let h_prime = 1.0 + (h - 1.0) / q as f64;
    Ok(HurstParams { h, q, h_prime, h_second: 2.0 * h_prime - 1.0 })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// a(H') = H'(2H'-1), the constant in the planar covariance |u-v|^{2H'-2}.
pub fn a_constant(h_prime: f64) -> f64 {
    h_prime * (2.0 * h_prime - 1.0)
}

pub fn d_constant(p: &HurstParams) -> f64 {
    let num = p.h * (2.0 * p.h - 1.0);
    let den = factorial(p.q) * a_constant(p.h_prime).powi(p.q as i32);
    (num / den).sqrt()
}

pub fn c1_constant(p: &HurstParams) -> Result<f64> {
    let hp = p.h_prime;
    if 4.0 * hp - 3.0 <= 0.0 {
        return Err(HvError::Regime(format!(
            "second-chaos normalization needs 4H'-3 > 0, got H'={hp}"
        )));
    }
    let d = d_constant(p);
    let a = a_constant(hp);
    let qm1 = (p.q - 1) as f64;
    let num = 4.0 * d.powi(4) * a.powi(2 * p.q as i32);
    let den = (4.0 * hp - 3.0)
        * (4.0 * hp - 2.0)
        * ((2.0 * hp - 2.0) * qm1 + 1.0).powi(2)
        * ((hp - 1.0) * qm1 + 1.0).powi(2);
    Ok(num / den)
}

pub fn combinatorial_coefficient(q: u32, k: u32) -> Result<f64> {
    if k >= q {
        return Err(HvError::Range(format!("k must satisfy 0 <= k <= q-1, got k={k}, q={q}")));
    }
    Ok(factorial(k) * binomial(q, k).powi(2))
}

pub fn z_constant(p: &HurstParams, k: u32) -> Result<f64> {
    if k == 0 || p.q < 2 || k > p.q - 2 {
        return Err(HvError::Range(format!("k must satisfy 1 <= k <= q-2, got k={k}, q={}", p.q)));
    }
    let d = d_constant(p);
    let a = a_constant(p.h_prime);
    let kf = k as f64;
    Ok(d * d * a.powi(k as i32)
        / ((p.h_prime - 1.0) * kf + 1.0)
        / (2.0 * (p.h_prime - 1.0) + 1.0))
}

/// Squared second difference of x^{2H}, the summand of the slow series in
/// x1 and b2.
fn g_squared(h: f64, k: f64) -> f64 {
    let g = 2.0 * k.powf(2.0 * h) - (k + 1.0).powf(2.0 * h) - (k - 1.0).powf(2.0 * h);
    g * g
}

/// Sum_{k>=1} g(k)^2 with g(k) = 2k^{2H} - (k+1)^{2H} - (k-1)^{2H}.
/// Terms decay like (2H(2H-1))^2 k^{4H-4}; the sum is truncated and the tail
/// replaced by its midpoint-rule integral, accurate to O(L^{4H-5}).
pub fn g_series(h: f64) -> f64 {
    const L: u64 = 1_000_000;
    let mut s = 0.0;
    for k in (1..=L).rev() {
        s += g_squared(h, k as f64);
    }
    let c = 2.0 * h * (2.0 * h - 1.0);
    let tail = c * c * (L as f64 + 0.5).powf(4.0 * h - 3.0) / (3.0 - 4.0 * h);
    s + tail
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct XConstants {
    pub x1: Option<f64>,
    pub x2: Option<f64>,
    pub x3: Option<f64>,
}

fn b_prefactor(p: &HurstParams, k: u32) -> f64 {
    let d = d_constant(p);
    factorial(p.q).powi(2) * binomial(p.q, k).powi(2) * d.powi(4)
        * a_constant(p.h_prime).powi(2 * p.q as i32)
}

pub fn b1_constant(p: &HurstParams, k: u32) -> f64 {
    2.0 * b_prefactor(p, k) / ((4.0 * p.h - 3.0) * (4.0 * p.h - 2.0))
}

pub fn b2_constant(p: &HurstParams, k: u32) -> f64 {
    b_prefactor(p, k) * g_series(p.h)
}

pub fn b3_constant(p: &HurstParams, k: u32) -> f64 {
    b_prefactor(p, k)
}

const H_THREE_QUARTERS_TOL: f64 = 1e-12;

/// Variance regime constants for the top chaos term: x1 applies on
/// H in (1/2,3/4), x2 on (3/4,1), x3 at H = 3/4; out-of-regime entries
/// are None, not errors.
pub fn x_constants(p: &HurstParams) -> XConstants {
    let at_boundary = (p.h - 0.75).abs() < H_THREE_QUARTERS_TOL;
    let x1 = if p.h < 0.75 && !at_boundary {
        let s: f64 = (1..p.q).map(|l| b2_constant(p, l)).sum();
        Some(s + 1.0 + 0.5 * g_series(p.h))
    } else {
        None
    };
    let x2 = if p.h > 0.75 && !at_boundary {
        let s: f64 = (1..p.q).map(|l| b1_constant(p, l)).sum();
        Some(s + p.h * p.h * (2.0 * p.h - 1.0) / (4.0 * p.h - 3.0))
    } else {
        None
    };
    let x3 = if at_boundary {
        let s: f64 = (1..p.q).map(|l| b3_constant(p, l)).sum();
        Some(s + 9.0 / 16.0)
    } else {
        None
    };
    XConstants { x1, x2, x3 }
}

/// Probabilists' monic Hermite polynomial, E[H_q(X)^2] = q! for X ~ N(0,1).
pub fn hermite_polynomial(q: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if q == 0 {
        return 1.0;
    }
    for n in 1..q {
        let next = x * cur - n as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn fgn_autocovariance(h: f64, lag: u64) -> f64 {
    if lag == 0 {
        return 1.0;
    }
    let k = lag as f64;
    0.5 * ((k + 1.0).powf(2.0 * h) + (k - 1.0).powf(2.0 * h) - 2.0 * k.powf(2.0 * h))
}

pub fn fbm_covariance(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

pub fn kernel_normalization(h_prime: f64) -> f64 {
    (a_constant(h_prime) / beta_fn(2.0 - 2.0 * h_prime, h_prime - 0.5)).sqrt()
}

/// Partial derivative in the first argument of the fBm Volterra kernel.
/// Singular like (t-s)^{H'-3/2} as s -> t; integrable, caller's problem.
pub fn kernel_derivative(h_prime: f64, t: f64, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < t && t <= 1.0) {
        return Err(HvError::Range(format!("need 0 < s < t <= 1, got s={s}, t={t}")));
    }
    Ok(kernel_normalization(h_prime) * (s / t).powf(0.5 - h_prime) * (t - s).powf(h_prime - 1.5))
}
