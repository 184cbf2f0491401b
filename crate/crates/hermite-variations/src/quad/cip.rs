//! Deterministic evaluation of the contraction inner products behind the
//! chaos-term variances. In rescaled unit-cell variables the lag-l inner
//! product for contraction order k is
//!
//!   CIP(k,l) = a^{2q} d^4 J_k(l),
//!   J_k(l) = int_{[0,1]^4} (|y-z||y'-z'|)^{ea} (|y-y'+l||z-z'+l|)^{eb},
//!
//! with ea = (2H'-2)k and eb = (2H'-2)(q-k). The 4-d integral reduces by
//! the substitutions s = y-y', t = z-z', r = y-z to iterated 1-d integrals
//!
//!   J = int ds int dt |s+l|^eb |t+l|^eb Phi_ea(s,t),
//!
//! each handled by splitting at the singular points and kinks, Jacobi rules
//! absorbing endpoint powers, and graded panels where a singular factor
//! caps the analyticity radius. For l >= 2 the (s,t) nodes and Phi values
//! do not depend on l, so they are tabulated once and each lag costs only
//! the weight factors.

use super::phi::phi;
use super::rules::{gauss_legendre, piece_integral};
use crate::error::{HvError, Result};
use crate::params::{a_constant, d_constant, HurstParams};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes_per_cell: usize,
    pub diagonal_splitting: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes_per_cell: 16, diagonal_splitting: true }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if self.nodes_per_cell < 4 {
            return Err(HvError::Config(format!(
                "nodes_per_cell must be >= 4, got {}",
                self.nodes_per_cell
            )));
        }
        Ok(())
    }
}

const SIGMA: f64 = 0.2;
const DEPTH: i32 = 12;
const EPS: f64 = 1e-14;
const REFINE_TOL: f64 = 1e-6;
/// Node count passed down to phi. The innermost integral converges by its
/// own absorbed rules and graded panels, so doubling the outer rules does
/// not need to double it; a fixed count keeps the refinement pass at 4x
/// instead of 8x cost.
const PHI_NODES: usize = 16;

/// Geometric panels over [p,q] graded toward p (else q). `floor` keeps
/// the innermost panel at least that long; when a singular factor sits
/// just outside the graded end, the floor set to its distance keeps every
/// panel inside that factor's analyticity radius.
fn graded_panels(p: f64, q: f64, toward_p: bool, floor: f64) -> Vec<(f64, f64)> {
    let length = q - p;
    let mut edges = vec![0.0f64];
    // the default cutoff resolves a kink at the graded end; a positive
    // floor (analyticity radius of a factor just outside) can pull the
    // innermost panel further down so no panel dwarfs its distance to
    // that factor, with a hard cap bounding the panel count
    let depth_cap = length * SIGMA.powi(DEPTH);
    let start = if floor > 0.0 {
        depth_cap.min(floor.max(length * SIGMA.powi(2 * DEPTH)))
    } else {
        depth_cap
    };
    let mut e = start.min(length);
    // relative stop tolerance: repeated division can land an edge within
    // an ulp of the far end, which would mirror into a degenerate panel
    while e < length * (1.0 - 1e-9) {
        edges.push(e);
        e /= SIGMA;
    }
    edges.push(length);
    let out = edges.windows(2).map(|w| (w[0], w[1]));
    if toward_p {
        out.map(|(x, y)| (p + x, p + y)).collect()
    } else {
        out.map(|(x, y)| (q - y, q - x)).collect()
    }
}

fn dedup_sorted(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if p - last <= EPS => {}
            _ => out.push(p),
        }
    }
    out
}

/// Inner t-integration nodes for a fixed s. Each node carries the weight
/// for the measure dt (phi not yet applied); `absorbed` marks nodes whose
/// weight already contains the |t+l|^eb factor (Jacobi absorption at the
/// singular endpoint t = -l, only used for l in {0,1}).
struct TNode {
    t: f64,
    w: f64,
    absorbed: bool,
}

fn t_nodes_for_s(s: f64, ell_special: Option<u64>, eb: f64, n: usize) -> Vec<TNode> {
    let ml = ell_special.map(|l| -(l as f64));
    let mut bps = vec![-1.0, 0.0, 1.0];
    for c in [s, s - 1.0, s + 1.0] {
        if c > -1.0 && c < 1.0 {
            bps.push(c);
        }
    }
    if let Some(m) = ml {
        if m > -1.0 && m < 1.0 {
            bps.push(m);
        }
    }
    let pts = dedup_sorted(bps);
    let mut nodes = Vec::new();
    let push_rule = |pp: f64, qq: f64, el: f64, er: f64, out: &mut Vec<TNode>| {
        if qq <= pp {
            return;
        }
        let rule = super::rules::gauss_jacobi(n, er, el);
        let h = 0.5 * (qq - pp);
        let mid = 0.5 * (pp + qq);
        let scale = h.powf(el + er + 1.0);
        for (&x, &w) in rule.0.iter().zip(rule.1.iter()) {
            out.push(TNode { t: mid + h * x, w: w * scale, absorbed: el != 0.0 || er != 0.0 });
        }
    };
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let p_s = (p - s).abs() < EPS;
        let q_s = (q - s).abs() < EPS;
        let p_ml = ml.map_or(false, |m| (p - m).abs() < EPS);
        let q_ml = ml.map_or(false, |m| (q - m).abs() < EPS);
        if p_s || q_s {
            // phi(s, .) has a |t-s|^{2ea+1} term at t = s: grade toward it;
            // the opposite panel end may sit on t = -l and then absorbs
            // the |t+l|^eb power. When t = -l lies just outside the graded
            // end, floor the panels at that distance
            let target = if p_s { p } else { q };
            let guard = match ml {
                Some(m) if m < p - EPS || m > q + EPS => (target - m).abs(),
                _ => 0.0,
            };
            for (pp, qq) in graded_panels(p, q, p_s, guard) {
                let el = if p_ml && (pp - p).abs() < 1e-300 { eb } else { 0.0 };
                let er = if q_ml && (qq - q).abs() < 1e-300 { eb } else { 0.0 };
                push_rule(pp, qq, el, er, &mut nodes);
            }
        } else if p_ml || q_ml {
            let el = if p_ml { eb } else { 0.0 };
            let er = if q_ml { eb } else { 0.0 };
            // the phi kink at t = s can sit just past the absorbed
            // endpoint (s and -l close together): grade toward it so no
            // panel dwarfs its distance to the kink
            let target = if p_ml { p } else { q };
            let dist = (target - s).abs();
            if (s < p - EPS || s > q + EPS) && dist < q - p {
                for (pp, qq) in graded_panels(p, q, p_ml, dist) {
                    let pel = if p_ml && (pp - p).abs() < 1e-300 { eb } else { 0.0 };
                    let per = if q_ml && (qq - q).abs() < 1e-300 { eb } else { 0.0 };
                    push_rule(pp, qq, pel, per, &mut nodes);
                }
            } else {
                push_rule(p, q, el, er, &mut nodes);
            }
        } else {
            // t = -l can also sit just outside a kink-bounded piece (the
            // kink at s -/+ 1 lands next to it when s is near +/-1): grade
            // toward the close endpoint, floored at the distance
            match ml {
                Some(m) if m > q + EPS && m - q < q - p => {
                    for (pp, qq) in graded_panels(p, q, false, m - q) {
                        push_rule(pp, qq, 0.0, 0.0, &mut nodes);
                    }
                }
                Some(m) if m < p - EPS && p - m < q - p => {
                    for (pp, qq) in graded_panels(p, q, true, p - m) {
                        push_rule(pp, qq, 0.0, 0.0, &mut nodes);
                    }
                }
                _ => {
                    let mid = 0.5 * (p + q);
                    push_rule(p, mid, 0.0, 0.0, &mut nodes);
                    push_rule(mid, q, 0.0, 0.0, &mut nodes);
                }
            }
        }
    }
    nodes
}

fn s_pieces(ell_special: Option<u64>) -> Vec<f64> {
    let mut bps = vec![-1.0, 0.0, 1.0];
    if let Some(l) = ell_special {
        let m = -(l as f64);
        for c in [m, m + 1.0, m - 1.0] {
            if c > -1.0 && c < 1.0 {
                bps.push(c);
            }
        }
    }
    dedup_sorted(bps)
}

/// Direct J evaluation used for the singular lags 0 and 1 (bespoke node
/// sets tied to the lag).
fn j_direct(ell: u64, ea: f64, eb: f64, n: usize, ell_special: Option<u64>) -> f64 {
    let ml = ell_special.map(|l| -(l as f64));
    let pts = s_pieces(ell_special);
    let lf = ell as f64;
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let p_ml = ml.map_or(false, |m| (p - m).abs() < EPS);
        let q_ml = ml.map_or(false, |m| (q - m).abs() < EPS);
        let panels = if p_ml || q_ml {
            graded_panels(p, q, p_ml, 0.0)
        } else {
            let mid = 0.5 * (p + q);
            vec![(p, mid), (mid, q)]
        };
        for (pp, qq) in panels {
            let el = if p_ml && (pp - p).abs() < 1e-300 { eb } else { 0.0 };
            let er = if q_ml && (qq - q).abs() < 1e-300 { eb } else { 0.0 };
            total += piece_integral(pp, qq, el, er, n, |s| {
                let inner: f64 = t_nodes_for_s(s, ell_special, eb, n)
                    .iter()
                    .map(|tn| {
                        let f = phi(s, tn.t, ea, PHI_NODES);
                        let wf =
                            if tn.absorbed { tn.w } else { tn.w * (tn.t + lf).abs().powf(eb) };
                        wf * f
                    })
                    .sum();
                if el != 0.0 || er != 0.0 {
                    inner
                } else {
                    inner * (s + lf).abs().powf(eb)
                }
            });
        }
    }
    total
}

/// Lag-independent node/Phi table for smooth lags (l >= 2): J(l) is then a
/// pure weight evaluation over these nodes.
struct SmoothTable {
    // per s-node: (s, ws, inner nodes (t, w*phi))
    rows: Vec<(f64, f64, Vec<(f64, f64)>)>,
}

impl SmoothTable {
    fn build(ea: f64, eb: f64, n: usize) -> SmoothTable {
        let gl = gauss_legendre(n);
        let mut rows = Vec::new();
        for w in s_pieces(None).windows(2) {
            let (p, q) = (w[0], w[1]);
            let mid = 0.5 * (p + q);
            for (pp, qq) in [(p, mid), (mid, q)] {
                let h = 0.5 * (qq - pp);
                let c = 0.5 * (pp + qq);
                for (&x, &wgt) in gl.0.iter().zip(gl.1.iter()) {
                    let s = c + h * x;
                    let inner = t_nodes_for_s(s, None, eb, n)
                        .iter()
                        .map(|tn| (tn.t, tn.w * phi(s, tn.t, ea, PHI_NODES)))
                        .collect();
                    rows.push((s, wgt * h, inner));
                }
            }
        }
        SmoothTable { rows }
    }

    fn eval(&self, ell: u64, eb: f64) -> f64 {
        let lf = ell as f64;
        let mut total = 0.0;
        for (s, ws, inner) in &self.rows {
            let mut acc = 0.0;
            for &(t, wphi) in inner {
                acc += wphi * (t + lf).powf(eb);
            }
            total += ws * (s + lf).powf(eb) * acc;
        }
        total
    }
}

type TableKey = (u64, u64, usize);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Arc<SmoothTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<SmoothTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn smooth_table(ea: f64, eb: f64, n: usize) -> Arc<SmoothTable> {
    let key = (ea.to_bits(), eb.to_bits(), n);
    if let Some(t) = table_cache().lock().unwrap().get(&key) {
        return t.clone();
    }
    let t = Arc::new(SmoothTable::build(ea, eb, n));
    table_cache().lock().unwrap().insert(key, t.clone());
    t
}

fn exponents(params: &HurstParams, k: u32) -> (f64, f64) {
    let base = 2.0 * params.h_prime - 2.0;
    (base * k as f64, base * (params.q - k) as f64)
}

fn prefactor(params: &HurstParams) -> f64 {
    a_constant(params.h_prime).powi(2 * params.q as i32) * d_constant(params).powi(4)
}

fn refine_check(coarse: f64, fine: f64, what: &str) -> Result<f64> {
    if (coarse / fine - 1.0).abs() > REFINE_TOL {
        return Err(HvError::Quadrature(format!(
            "{what}: node doubling moved the value by {:.3e} relative (tolerance {REFINE_TOL:.0e})",
            (coarse / fine - 1.0).abs()
        )));
    }
    Ok(fine)
}

type JKey = (u64, u64, u64, usize, bool);

fn j_cache() -> &'static Mutex<HashMap<JKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<JKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn j_value(ell: u64, ea: f64, eb: f64, n: usize, spec: &QuadratureSpec) -> f64 {
    if ell <= 1 {
        // the direct singular-lag evaluation is expensive and independent
        // of the grid size, so it is worth memoizing across assemblies
        let key = (ell, ea.to_bits(), eb.to_bits(), n, spec.diagonal_splitting);
        if let Some(&v) = j_cache().lock().unwrap().get(&key) {
            return v;
        }
        let v = j_direct(ell, ea, eb, n, if spec.diagonal_splitting { Some(ell) } else { None });
        j_cache().lock().unwrap().insert(key, v);
        v
    } else {
        smooth_table(ea, eb, n).eval(ell, eb)
    }
}

/// Value of the rescaled unit-cell contraction inner product at the given
/// lag, including the a(H')^{2q} d(H,q)^4 prefactor. Every value passes a
/// node-doubling refinement check.
pub fn contraction_inner_product(
    params: &HurstParams,
    k: u32,
    lag: u64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if k >= params.q {
        return Err(HvError::Range(format!("k must satisfy 0 <= k <= q-1, got k={k}")));
    }
    let (ea, eb) = exponents(params, k);
    let n = spec.nodes_per_cell;
    let coarse = j_value(lag, ea, eb, n, spec);
    let fine = j_value(lag, ea, eb, 2 * n, spec);
    let j = refine_check(coarse, fine, &format!("contraction inner product at lag {lag}"))?;
    Ok(prefactor(params) * j)
}

pub const ORACLE_MAX_N: u64 = 1 << 10;

/// Weighted lag sum N * v(0) + 2 sum_{l=1}^{N-1} (N-l) v(l), the
/// stationarity reduction of the double sum over grid cells.
fn lag_assembly(n_grid: u64, ea: f64, eb: f64, n: usize, spec: &QuadratureSpec) -> f64 {
    let mut total = n_grid as f64 * j_value(0, ea, eb, n, spec);
    let smooth = if n_grid > 2 { Some(smooth_table(ea, eb, n)) } else { None };
    for ell in 1..n_grid {
        let j = if ell == 1 {
            j_value(1, ea, eb, n, spec)
        } else {
            smooth.as_ref().unwrap().eval(ell, eb)
        };
        total += 2.0 * (n_grid - ell) as f64 * j;
    }
    total
}

fn assemble(params: &HurstParams, k: u32, n_grid: u64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if n_grid < 1 || n_grid > ORACLE_MAX_N {
        return Err(HvError::Range(format!("N must be in [1, {ORACLE_MAX_N}], got {n_grid}")));
    }
    let (ea, eb) = exponents(params, k);
    let n = spec.nodes_per_cell;
    let coarse = lag_assembly(n_grid, ea, eb, n, spec);
    let fine = lag_assembly(n_grid, ea, eb, 2 * n, spec);
    let sum = refine_check(coarse, fine, &format!("lag assembly at N={n_grid}, k={k}"))?;
    let nf = n_grid as f64;
    Ok(prefactor(params) * sum / (nf * nf))
}

/// Exact second moment of the lowest chaos term T_2 of the centered
/// quadratic variation (contraction order k = q-1), assembled from the lag
/// inner products. For H' > 3/4 it approaches c_{1,H} N^{2(2H'-2)}.
pub fn expected_t2_squared(
    params: &HurstParams,
    n_grid: u64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let v = assemble(params, params.q - 1, n_grid, spec)?;
    Ok(2.0 * v)
}

/// Symmetrization upper bound for the second moment of the chaos term of
/// order 2q-2k; scales as N^{(2H'-2)(2q-2k)}.
pub fn expected_t2q2k_squared_bound(
    params: &HurstParams,
    k: u32,
    n_grid: u64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if params.q < 2 || k > params.q - 2 {
        return Err(HvError::Range(format!("k must satisfy 0 <= k <= q-2, got k={k}, q={}", params.q)));
    }
    let v = assemble(params, k, n_grid, spec)?;
    let mut fact = 1.0;
    for i in 1..=(2 * (params.q - k)) {
        fact *= i as f64;
    }
    Ok(fact * v)
}
