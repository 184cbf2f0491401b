use crate::error::{HvError, Result};
use crate::params::fgn_autocovariance;
use crate::rng::RandomStream;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Circulant,
    Cholesky,
}

/// Stationary unit-variance fractional Gaussian noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianSeries {
    pub hurst: f64,
    pub values: Vec<f64>,
    pub kind: SeriesKind,
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: std::sync::OnceLock<Mutex<FftPlanner<f64>>> = std::sync::OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn fft_of_len(m: usize) -> Arc<dyn Fft<f64>> {
    planner().lock().unwrap().plan_fft_forward(m)
}

/// Eigenvalues of the order-2n circulant embedding of the fGn covariance,
/// in frequency order (index j corresponds to frequency j/2n).
pub fn embedding_eigenvalues(h: f64, n: usize) -> Vec<f64> {
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let lag = if j <= n { j } else { m - j } as u64;
        row.push(Complex::new(fgn_autocovariance(h, lag), 0.0));
    }
    fft_of_len(m).process(&mut row);
    row.into_iter().map(|c| c.re).collect()
}

/// Exact fGn sampling: the covariance is embedded in a circulant matrix
/// diagonalized by the FFT, complex Gaussians are drawn per frequency with
/// conjugate symmetry, and the first n entries of the transform are returned.
pub fn generate_fgn_circulant(h: f64, n: usize, stream: RandomStream) -> Result<GaussianSeries> {
    if !(h > 0.0 && h < 1.0) {
        return Err(HvError::ParamDomain(format!("H must be in (0,1), got {h}")));
    }
    if n == 0 {
        return Err(HvError::ParamDomain("n must be >= 1".into()));
    }
    let m = 2 * n;
    let mut lambda = embedding_eigenvalues(h, n);
    // fGn embeddings are nonnegative in theory; material negatives mean a bug
    let max = lambda.iter().cloned().fold(f64::MIN, f64::max);
    for (j, l) in lambda.iter_mut().enumerate() {
        if *l < 0.0 {
            if *l < -1e-10 * max {
                return Err(HvError::Embedding { index: j, value: *l });
            }
            *l = 0.0;
        }
    }

    let mut src = stream.source();
    let mf = m as f64;
    let mut w = vec![Complex::new(0.0, 0.0); m];
    w[0] = Complex::new((lambda[0] / mf).sqrt() * src.next_normal(), 0.0);
    for j in 1..n {
        let scale = (lambda[j] / (2.0 * mf)).sqrt();
        let re = scale * src.next_normal();
        let im = scale * src.next_normal();
        w[j] = Complex::new(re, im);
        w[m - j] = Complex::new(re, -im);
    }
    w[n] = Complex::new((lambda[n] / mf).sqrt() * src.next_normal(), 0.0);

    fft_of_len(m).process(&mut w);
    let values = w[..n].iter().map(|c| c.re).collect();
    Ok(GaussianSeries { hurst: h, values, kind: SeriesKind::Circulant })
}

pub const CHOLESKY_MAX_N: usize = 4096;

/// O(n^3) oracle: dense Cholesky of the Toeplitz covariance.
pub fn generate_fgn_cholesky(h: f64, n: usize, stream: RandomStream) -> Result<GaussianSeries> {
    if n > CHOLESKY_MAX_N {
        return Err(HvError::Range(format!("cholesky generator capped at n={CHOLESKY_MAX_N}, got {n}")));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(HvError::ParamDomain(format!("H must be in (0,1), got {h}")));
    }
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = fgn_autocovariance(h, (i - j) as u64);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(HvError::Factorization { pivot: i, value: s });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut z = vec![0.0f64; n];
    stream.source().fill_normals(&mut z);
    let mut values = vec![0.0f64; n];
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..=i {
            s += l[i * n + k] * z[k];
        }
        values[i] = s;
    }
    Ok(GaussianSeries { hurst: h, values, kind: SeriesKind::Cholesky })
}
