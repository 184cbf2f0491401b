use statrs::function::gamma::ln_gamma;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Symmetric tridiagonal QL with implicit shifts, tracking only the first
/// component of each eigenvector (all that Gauss weights need).
fn tql_first_components(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 64, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Nodes and weights on [-1,1] for the weight (1-x)^alpha (1+x)^beta,
/// alpha, beta > -1. alpha = beta = 0 is Gauss-Legendre.
pub fn gauss_jacobi_raw(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && alpha > -1.0 && beta > -1.0);
    let (a, b) = (alpha, beta);
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    d[0] = (b - a) / (a + b + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let denom = (2.0 * kf + a + b) * (2.0 * kf + a + b + 2.0);
        d[k] = (b * b - a * a) / denom;
        // off-diagonal between k-1 and k; k=1 uses the cancelled form to
        // avoid 0/0 when a+b = -1
        let bk = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + a + b)
                / ((2.0 * kf + a + b).powi(2) * (2.0 * kf + a + b + 1.0) * (2.0 * kf + a + b - 1.0))
        };
        e[k - 1] = bk.sqrt();
    }
    let mut z = vec![0.0f64; n];
    z[0] = 1.0;
    tql_first_components(&mut d, &mut e, &mut z);
    let mu0 = 2f64.powf(a + b + 1.0) * beta_fn(a + 1.0, b + 1.0);
    let mut pairs: Vec<(f64, f64)> =
        d.into_iter().zip(z).map(|(x, zz)| (x, mu0 * zz * zz)).collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    pairs.into_iter().unzip()
}

type RuleKey = (usize, u64, u64);
type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cache() -> &'static Mutex<HashMap<RuleKey, Rule>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Rule>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule {
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let r = Arc::new(gauss_jacobi_raw(n, alpha, beta));
    cache().lock().unwrap().insert(key, r.clone());
    r
}

pub fn gauss_legendre(n: usize) -> Rule {
    gauss_jacobi(n, 0.0, 0.0)
}

/// int_p^q (r-p)^{expo_left} (q-r)^{expo_right} g(r) dr by the matching
/// Jacobi rule; zero exponents give plain Gauss-Legendre.
pub fn piece_integral(
    p: f64,
    q: f64,
    expo_left: f64,
    expo_right: f64,
    n: usize,
    mut g: impl FnMut(f64) -> f64,
) -> f64 {
    if q <= p {
        return 0.0;
    }
    let rule = gauss_jacobi(n, expo_right, expo_left);
    let h = 0.5 * (q - p);
    let mid = 0.5 * (p + q);
    let scale = h.powf(expo_left + expo_right + 1.0);
    let mut acc = 0.0;
    for (&x, &w) in rule.0.iter().zip(rule.1.iter()) {
        acc += w * g(mid + h * x);
    }
    scale * acc
}

/// Geometric panels over [0, half] expanding away from 0: the first panel
/// ends at `guard` (the analyticity radius at the endpoint), later panels
/// grow by a fixed ratio.
fn expanding_panels(half: f64, guard: f64) -> Vec<(f64, f64)> {
    const RATIO: f64 = 5.0;
    let mut edges = vec![0.0, guard.min(half).max(half * 1e-14)];
    while *edges.last().unwrap() < half {
        let next = (edges.last().unwrap() * RATIO).min(half);
        edges.push(next);
    }
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// int_lo^hi (x-lo)^{el} (hi-x)^{er} g(x) dx for g analytic on (lo,hi) but
/// possibly singular just outside: guard_l / guard_r are the distances from
/// lo / hi to the nearest such point (INFINITY if none). Endpoint powers are
/// absorbed by Jacobi rules on the innermost panels and reinstated on the
/// expanding outer panels.
#[allow(clippy::too_many_arguments)]
pub fn guarded_pair_integral(
    lo: f64,
    hi: f64,
    el: f64,
    er: f64,
    guard_l: f64,
    guard_r: f64,
    n: usize,
    g: impl Fn(f64) -> f64,
) -> f64 {
    let half = 0.5 * (hi - lo);
    if half <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, (a, b)) in expanding_panels(half, guard_l).into_iter().enumerate() {
        let absorb = i == 0;
        total += piece_integral(lo + a, lo + b, if absorb { el } else { 0.0 }, 0.0, n, |x| {
            let mut v = g(x);
            if er != 0.0 {
                v *= (hi - x).powf(er);
            }
            if !absorb && el != 0.0 {
                v *= (x - lo).powf(el);
            }
            v
        });
    }
    for (i, (a, b)) in expanding_panels(half, guard_r).into_iter().enumerate() {
        let absorb = i == 0;
        total += piece_integral(hi - b, hi - a, 0.0, if absorb { er } else { 0.0 }, n, |x| {
            let mut v = g(x);
            if el != 0.0 {
                v *= (x - lo).powf(el);
            }
            if !absorb && er != 0.0 {
                v *= (hi - x).powf(er);
            }
            v
        });
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn guarded_pair_matches_beta() {
        // int_0^1 x^{-0.4}(1-x)^{-0.6} dx = B(0.6, 0.4)
        let v = guarded_pair_integral(0.0, 1.0, -0.4, -0.6, f64::INFINITY, f64::INFINITY, 16, |_| 1.0);
        assert_relative_eq!(v, beta_fn(0.6, 0.4), max_relative = 1e-12);
        // nearby external singularity: int_0^1 x^{-0.4} (1.01-x)^{-0.6} dx,
        // reference from a dense graded evaluation at high order
        let f = |x: f64| (1.01 - x).powf(-0.6);
        let v = guarded_pair_integral(0.0, 1.0, -0.4, 0.0, f64::INFINITY, 0.01, 16, f);
        let w = guarded_pair_integral(0.0, 1.0, -0.4, 0.0, f64::INFINITY, 0.01, 48, f);
        assert_relative_eq!(v, w, max_relative = 1e-10);
    }

    #[test]
    fn legendre_exactness() {
        // n-point rule integrates degree 2n-1 exactly
        let r = gauss_legendre(5);
        let mut acc = 0.0;
        for (&x, &w) in r.0.iter().zip(r.1.iter()) {
            acc += w * (x.powi(9) + 3.0 * x.powi(8) + x.powi(2));
        }
        assert_relative_eq!(acc, 3.0 * 2.0 / 9.0 + 2.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn legendre_weight_sum() {
        for &n in &[4usize, 16, 32, 64] {
            let r = gauss_legendre(n);
            let s: f64 = r.1.iter().sum();
            assert_relative_eq!(s, 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn jacobi_moments() {
        // weight (1-x)^a (1+x)^b: zeroth moment 2^{a+b+1} B(a+1,b+1),
        // and the rule integrates low-degree polynomials against it exactly
        let (a, b) = (-0.2, -0.6);
        let r = gauss_jacobi(8, a, b);
        let m0: f64 = r.1.iter().sum();
        assert_relative_eq!(m0, 2f64.powf(a + b + 1.0) * beta_fn(a + 1.0, b + 1.0), max_relative = 1e-12);
        // first moment: mu0 * (b-a)/(a+b+2)
        let m1: f64 = r.0.iter().zip(r.1.iter()).map(|(&x, &w)| w * x).sum();
        assert_relative_eq!(m1, m0 * (b - a) / (a + b + 2.0), max_relative = 1e-11);
    }

    #[test]
    fn piece_integral_power_law() {
        // int_0^2 r^{-0.3} (2-r)^{-0.5} dr = 2^{0.2} B(0.7, 0.5)
        let v = piece_integral(0.0, 2.0, -0.3, -0.5, 12, |_| 1.0);
        assert_relative_eq!(v, 2f64.powf(0.2) * beta_fn(0.7, 0.5), max_relative = 1e-12);
        // smooth factor: int_0^1 r^{-0.5} e^r dr, reference from series
        let v = piece_integral(0.0, 1.0, -0.5, 0.0, 24, f64::exp);
        let mut want = 0.0;
        let mut fact = 1.0;
        for k in 0..40 {
            if k > 0 {
                fact *= k as f64;
            }
            want += 1.0 / (fact * (k as f64 + 0.5));
        }
        assert_relative_eq!(v, want, max_relative = 1e-12);
    }
}
