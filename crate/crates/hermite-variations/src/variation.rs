use crate::error::{HvError, Result};
use crate::params::{c1_constant, combinatorial_coefficient, HurstParams};
use crate::simulator::HermitePath;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub n: usize,
    pub v_n: f64,
    pub s_n: f64,
    pub h_hat: f64,
    /// Rescaled V_N expected to approach the standard Rosenblatt law.
    pub normalized_v_n: Option<f64>,
    /// Rescaled estimation error 2 N^{2-2H_hat'} (H - H_hat) log N.
    pub normalized_error: Option<f64>,
    pub true_h: Option<f64>,
}

/// Mean square increment: S_N = (1/N) sum (Z_{(i+1)/N} - Z_{i/N})^2.
pub fn empirical_mean_square(path: &HermitePath) -> f64 {
    let n = path.n_obs;
    let mut t = 0.0;
    for i in 0..n {
        let d = path.values[i + 1] - path.values[i];
        t += d * d;
    }
    t / n as f64
}

/// Centered quadratic variation V_N = (1/N) sum [ (dZ_i)^2 N^{2H} - 1 ],
/// computed as N^{2H} S_N - 1 so that the algebraic identity
/// 1 + V_N = N^{2H} S_N holds to the last bit.
pub fn centered_quadratic_variation(path: &HermitePath, h: f64) -> f64 {
    (path.n_obs as f64).powf(2.0 * h) * empirical_mean_square(path) - 1.0
}

pub fn estimate_hurst(path: &HermitePath) -> Result<f64> {
    let s_n = empirical_mean_square(path);
    if s_n <= 0.0 {
        return Err(HvError::Degenerate(format!("S_N = {s_n}, cannot take log")));
    }
    Ok(-s_n.ln() / (2.0 * (path.n_obs as f64).ln()))
}

/// c1^{-1/2} N^{2-2H'} c2^{-1} V_N, which converges in law to a standard
/// Rosenblatt variable with parameter H''.
pub fn normalized_limit_statistic(v_n: f64, params: &HurstParams, n: usize) -> Result<f64> {
    let c1 = c1_constant(params)?;
    let c2 = combinatorial_coefficient(params.q, params.q - 1)?;
    Ok((n as f64).powf(2.0 - 2.0 * params.h_prime) * v_n / (c1.sqrt() * c2))
}

/// 2 N^{2-2H_hat'} (H - H_hat) log N with H_hat' = 1 + (H_hat - 1)/q; its
/// limit is c2 c1^{1/2} times a standard Rosenblatt variable.
pub fn plugin_normalized_error(h_hat: f64, h: f64, params: &HurstParams, n: usize) -> f64 {
    let h_hat_prime = 1.0 + (h_hat - 1.0) / params.q as f64;
    let nf = n as f64;
    2.0 * nf.powf(2.0 - 2.0 * h_hat_prime) * (h - h_hat) * nf.ln()
}

/// Full per-path report. The centering and the normalization constants use
/// the true H when supplied; the normalized statistics are omitted outside
/// the H' > 3/4 regime rather than reported with an invalid constant.
pub fn variation_report(path: &HermitePath, true_h: Option<f64>) -> Result<VariationReport> {
    let s_n = empirical_mean_square(path);
    let h_hat = estimate_hurst(path)?;
    let (v_n, normalized_v_n, normalized_error) = match true_h {
        Some(h) => {
            let v_n = centered_quadratic_variation(path, h);
            let nvn = normalized_limit_statistic(v_n, &path.params, path.n_obs).ok();
            let ne = plugin_normalized_error(h_hat, h, &path.params, path.n_obs);
            (v_n, nvn, Some(ne))
        }
        None => (centered_quadratic_variation(path, path.params.h), None, None),
    };
    Ok(VariationReport { n: path.n_obs, v_n, s_n, h_hat, normalized_v_n, normalized_error, true_h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use crate::rng::RandomStream;
    use approx::assert_relative_eq;

    fn path_with_values(h: f64, q: u32, values: Vec<f64>) -> HermitePath {
        HermitePath {
            params: derive_params(h, q).unwrap(),
            n_obs: values.len() - 1,
            oversampling: 1,
            values,
            sigma_n: 1.0,
            provenance: RandomStream::new(0, 0),
        }
    }

    #[test]
    fn constant_size_increments() {
        let h = 0.8;
        let n = 8usize;
        let step = (n as f64).powf(-h);
        // alternating +-N^{-H} increments: every summand of V_N vanishes
        let mut vals = vec![0.0];
        for i in 0..n {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            vals.push(vals[i] + sign * step);
        }
        let p = path_with_values(h, 2, vals);
        assert_relative_eq!(centered_quadratic_variation(&p, h), 0.0, epsilon = 1e-12);
        assert_relative_eq!(empirical_mean_square(&p), (n as f64).powf(-2.0 * h), max_relative = 1e-12);
        assert_relative_eq!(estimate_hurst(&p).unwrap(), h, max_relative = 1e-12);
    }

    #[test]
    fn flat_path() {
        let p = path_with_values(0.8, 2, vec![0.0; 9]);
        assert_relative_eq!(centered_quadratic_variation(&p, 0.8), -1.0, epsilon = 1e-15);
        assert!(matches!(estimate_hurst(&p), Err(HvError::Degenerate(_))));
    }

    #[test]
    fn estimator_trivial_cases() {
        // N=2 with S_N = 1: log 1 = 0
        let vals = vec![0.0, 1.0, 0.0];
        let p = path_with_values(0.8, 2, vals);
        assert_relative_eq!(empirical_mean_square(&p), 1.0, epsilon = 1e-15);
        assert_relative_eq!(estimate_hurst(&p).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vnsn_identity_on_simulated_paths() {
        let params = derive_params(0.8, 2).unwrap();
        for rep in 0..20 {
            let path = crate::simulator::simulate_path(
                &params,
                64,
                4,
                RandomStream::new(5, 0).derive("vnsn", rep),
            )
            .unwrap();
            let v = centered_quadratic_variation(&path, 0.8);
            let s = empirical_mean_square(&path);
            let lhs = 1.0 + v;
            let rhs = (64f64).powf(1.6) * s;
            let ulps = ((lhs - rhs).abs() / (rhs.abs() * f64::EPSILON)).ceil();
            assert!(ulps <= 8.0, "identity off by {ulps} ulps");
        }
    }

    #[test]
    fn normalization_constants() {
        let params = derive_params(0.8, 2).unwrap();
        // c2 = 4, exponent 0.2, c1 = 25/54
        let v = normalized_limit_statistic(1.0, &params, 32).unwrap();
        let want = 32f64.powf(0.2) / (4.0 * (25f64 / 54.0).sqrt());
        assert_relative_eq!(v, want, max_relative = 1e-13);
        assert_eq!(normalized_limit_statistic(0.0, &params, 32).unwrap(), 0.0);
        // regime error propagates for q=1, H <= 3/4
        let p1 = derive_params(0.7, 1).unwrap();
        assert!(normalized_limit_statistic(1.0, &p1, 32).is_err());
    }

    #[test]
    fn plugin_error_cases() {
        let params = derive_params(0.8, 2).unwrap();
        assert_eq!(plugin_normalized_error(0.8, 0.8, &params, 1024), 0.0);
        // exponent at H_hat = 0.8, q = 2 is 0.2
        let v = plugin_normalized_error(0.8, 0.9, &params, 1024);
        assert_relative_eq!(v, 2.0 * 1024f64.powf(0.2) * 0.1 * 1024f64.ln(), max_relative = 1e-13);
    }
}
