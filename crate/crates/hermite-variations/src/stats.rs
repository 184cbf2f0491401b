use crate::error::{HvError, Result};
use serde::{Deserialize, Serialize};

/// Two-sample Kolmogorov-Smirnov statistic: sup distance between empirical
/// distribution functions, by a sorted merge.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(HvError::Range("KS needs two nonempty samples".into()));
    }
    let mut x: Vec<f64> = a.to_vec();
    let mut y: Vec<f64> = b.to_vec();
    x.sort_by(|p, q| p.partial_cmp(q).unwrap());
    y.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Ordinary least squares fit of y against x; returns (slope, stderr).
pub fn regress_scaling(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len();
    if n < 3 {
        return Err(HvError::Range(format!("regression needs >= 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= 0.0 {
        return Err(HvError::Degenerate("regression abscissae are degenerate".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - intercept - slope * p.0;
            r * r
        })
        .sum();
    let stderr = (ss_res / (nf - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// None when the sample is degenerate (zero variance).
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

/// Unbiased mean/variance plus standardized central third and fourth
/// moments.
pub fn moment_report(samples: &[f64]) -> Result<Moments> {
    let n = samples.len();
    if n < 4 {
        return Err(HvError::Range(format!("moment report needs >= 4 samples, got {n}")));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    let variance = m2 / (nf - 1.0);
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    } else {
        (None, None)
    };
    Ok(Moments { mean, variance, skewness, excess_kurtosis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use approx::assert_relative_eq;

    #[test]
    fn ks_identical_and_disjoint() {
        let a = vec![1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let zeros = vec![0.0; 10];
        let ones = vec![1.0; 7];
        assert_eq!(ks_two_sample(&zeros, &ones).unwrap(), 1.0);
        assert!(ks_two_sample(&a, &[]).is_err());
    }

    #[test]
    fn ks_null_distribution() {
        // two standard-normal samples of size 1000: statistic below the 5%
        // critical value 1.358 sqrt(2/1000) = 0.0607 in >= 95% of seeds
        let mut below = 0;
        let trials = 200;
        for t in 0..trials {
            let mut a = vec![0.0; 1000];
            let mut b = vec![0.0; 1000];
            RandomStream::new(100, 0).derive("ks-a", t).source().fill_normals(&mut a);
            RandomStream::new(100, 0).derive("ks-b", t).source().fill_normals(&mut b);
            if ks_two_sample(&a, &b).unwrap() < 0.0607 {
                below += 1;
            }
        }
        assert!(below as f64 >= 0.93 * trials as f64, "only {below}/{trials} below critical value");
    }

    #[test]
    fn regression_exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, -0.4 * i as f64 + 1.0)).collect();
        let (slope, se) = regress_scaling(&pts).unwrap();
        assert_relative_eq!(slope, -0.4, max_relative = 1e-12);
        assert!(se.abs() < 1e-12);
    }

    #[test]
    fn regression_errors() {
        assert!(regress_scaling(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(regress_scaling(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
    }

    #[test]
    fn regression_recovers_noisy_slope() {
        let mut src = RandomStream::new(7, 0).source();
        let pts: Vec<(f64, f64)> =
            (0..50).map(|i| (i as f64 / 10.0, 2.5 * i as f64 / 10.0 + 0.1 * src.next_normal())).collect();
        let (slope, se) = regress_scaling(&pts).unwrap();
        assert!((slope - 2.5).abs() < 2.0 * se, "slope {slope} se {se}");
    }

    #[test]
    fn moments_basic() {
        let m = moment_report(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_relative_eq!(m.variance, 4.0 / 3.0, max_relative = 1e-14);
        assert_eq!(m.skewness.unwrap(), 0.0);
        let m = moment_report(&[2.0; 8]).unwrap();
        assert_eq!(m.variance, 0.0);
        assert!(m.skewness.is_none() && m.excess_kurtosis.is_none());
        assert!(moment_report(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn moments_of_standard_normal_sample() {
        let n = 100_000;
        let mut a = vec![0.0; n];
        RandomStream::new(11, 0).source().fill_normals(&mut a);
        let m = moment_report(&a).unwrap();
        let nf = n as f64;
        assert!(m.mean.abs() < 3.0 / nf.sqrt());
        assert!((m.variance - 1.0).abs() < 3.0 * (2.0 / nf).sqrt());
        assert!(m.skewness.unwrap().abs() < 3.0 * (6.0 / nf).sqrt());
        assert!(m.excess_kurtosis.unwrap().abs() < 3.0 * (24.0 / nf).sqrt());
    }
}
