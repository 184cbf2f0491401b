//! Innermost layer of the contraction integral after the stationarity
//! reduction: with s = y-y', t = z-z', r = y-z and delta = s-t,
//!
//!   Phi_a(s,t) = int |r|^a |r-delta|^a L(r; s,t) dr,
//!
//! where L is the (piecewise linear) overlap length of the two unit
//! intervals shifted by s and t. The integrand has power singularities at
//! r = 0 and r = delta and kinks where L changes slope; pieces between
//! those points are integrated with power-absorbing Jacobi rules, and
//! pieces that still contain a nearby singular factor inside use geometric
//! panels graded toward it.

use super::rules::piece_integral;

/// Panel contraction ratio for graded subdivision.
const SIGMA: f64 = 0.2;
const EPS: f64 = 1e-14;

/// Geometric panel edges over [0, half] graded toward 0, stopping once a
/// panel is shorter than `floor` (the distance to the nearest remaining
/// singular factor, inside which the integrand is analytic).
fn graded_edges(half: f64, floor: f64) -> Vec<f64> {
    let mut edges = vec![0.0f64];
    loop {
        let last = *edges.last().unwrap();
        if last >= half {
            break;
        }
        let mut next = if last == 0.0 { floor.min(half) } else { floor.max(last / SIGMA) };
        next = next.min(half);
        if next <= last {
            next = half;
        }
        edges.push(next);
    }
    edges
}

pub fn phi(s: f64, t: f64, a: f64, n: usize) -> f64 {
    let ly = s.max(0.0);
    let uy = (1.0 + s).min(1.0);
    let lz = t.max(0.0);
    let uz = (1.0 + t).min(1.0);
    let delta = s - t;
    let rmin = ly - uz;
    let rmax = uy - lz;
    if rmax <= rmin {
        return 0.0;
    }
    if a == 0.0 {
        // overlap integral of the trapezoid; L is piecewise linear with
        // kinks at ly-lz and uy-uz
        let pts = breakpoints(rmin, rmax, &[ly - lz, uy - uz]);
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += piece_integral(w[0], w[1], 0.0, 0.0, 2, |r| overlap(r, ly, uy, lz, uz));
        }
        return total;
    }

    let coincident = delta.abs() <= EPS;
    let pts = if coincident {
        breakpoints(rmin, rmax, &[ly - lz, uy - uz, 0.0])
    } else {
        breakpoints(rmin, rmax, &[ly - lz, uy - uz, 0.0, delta])
    };

    let mut total = 0.0;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        // classify the singular points: absorbed at an endpoint or
        // remaining inside the piece
        let mut el = 0.0;
        let mut er = 0.0;
        let mut rem = [0.0f64; 2];
        let mut nrem = 0;
        let sing: &[(f64, f64)] =
            if coincident { &[(0.0, 2.0 * a)][..] } else { &[(0.0, a), (delta, a)][..] };
        for &(c, expo) in sing {
            if (p - c).abs() < EPS {
                el += expo;
            } else if (q - c).abs() < EPS {
                er += expo;
            } else {
                rem[nrem] = c;
                nrem += 1;
            }
        }
        let rem = &rem[..nrem];
        let g = |r: f64| {
            let mut out = overlap(r, ly, uy, lz, uz);
            for &c in rem {
                out *= (r - c).abs().powf(a);
            }
            out
        };
        // a remaining singular factor near an endpoint limits the
        // analyticity radius there, whether it sits inside the domain or
        // just past the endpoint; grade toward any endpoint that is itself
        // absorbed or has a singular factor closer than half the piece
        let half = 0.5 * (q - p);
        let dl = rem.iter().map(|&c| (p - c).abs()).fold(f64::MAX, f64::min);
        let dr = rem.iter().map(|&c| (q - c).abs()).fold(f64::MAX, f64::min);
        let need_l = el != 0.0 || dl < half;
        let need_r = er != 0.0 || dr < half;
        if !need_l && !need_r {
            total += piece_integral(p, q, el, er, n, g);
            continue;
        }
        let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
        if need_l {
            let e = graded_edges(half, dl.min(half));
            for i in 0..e.len() - 1 {
                panels.push((p + e[i], p + e[i + 1], if i == 0 { el } else { 0.0 }, 0.0));
            }
        } else {
            panels.push((p, p + half, 0.0, 0.0));
        }
        if need_r {
            let e = graded_edges(half, dr.min(half));
            for i in 0..e.len() - 1 {
                panels.push((q - e[i + 1], q - e[i], 0.0, if i == 0 { er } else { 0.0 }));
            }
        } else {
            panels.push((p + half, q, 0.0, 0.0));
        }
        for (pp, qq, sel, ser) in panels {
            // outer panels reinstate the factor the innermost panel absorbs
            let gg = |r: f64| {
                let mut out = g(r);
                if sel == 0.0 && el != 0.0 {
                    out *= (r - p).abs().powf(el);
                }
                if ser == 0.0 && er != 0.0 {
                    out *= (q - r).abs().powf(er);
                }
                out
            };
            total += piece_integral(pp, qq, sel, ser, n, gg);
        }
    }
    total
}

fn overlap(r: f64, ly: f64, uy: f64, lz: f64, uz: f64) -> f64 {
    (uy.min(uz + r) - ly.max(lz + r)).max(0.0)
}

/// Sorted, deduplicated breakpoints of [lo, hi] including the interior
/// candidates that fall inside.
fn breakpoints(lo: f64, hi: f64, candidates: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for &c in candidates {
        if c > lo && c < hi {
            pts.push(c);
        }
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if p - last <= 1e-15 * p.abs().max(1.0) => {}
            _ => out.push(p),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // frozen adaptive-quadrature references, abs accuracy ~1e-13
    const REFS_A02: &[(f64, f64, f64)] = &[
        (0.3, 0.1, 1.29880158329442),
        (-0.5, 0.2, 0.695609718616891),
        (0.05, 0.049, 1.915393537357),
        (0.7, -0.7, 0.104467181601913),
        (-0.01, 0.02, 1.98905190581006),
        (0.5, 0.5, 0.687243703527549),
        (0.2, 0.2001, 1.45652957230046),
        (-0.3, -0.2999999, 1.17736153224274),
        (0.9, 0.85, 0.0621091932568029),
        (-0.35, 0.6, 0.377686225384078),
    ];
    const REFS_A04: &[(f64, f64, f64)] = &[
        (0.3, 0.1, 3.07572049149886),
        (-0.5, 0.2, 1.27398287346885),
        (0.05, 0.049, 6.55102887706864),
        (0.7, -0.7, 0.121267200234578),
        (-0.01, 0.02, 5.53386525480155),
        (0.5, 0.5, 3.62729401373385),
        (0.2, 0.2001, 5.69044416470617),
        (-0.3, -0.2999999, 5.28119942591405),
        (0.9, 0.85, 0.285091680474504),
        (-0.35, 0.6, 0.562020426792384),
    ];

    #[test]
    fn matches_adaptive_references() {
        for (a, refs) in [(-0.2, REFS_A02), (-0.4, REFS_A04)] {
            for &(s, t, want) in refs {
                let got = phi(s, t, a, 16);
                assert_relative_eq!(got, want, max_relative = 5e-9);
            }
        }
    }

    #[test]
    fn node_doubling_is_stable() {
        for &(s, t, _) in REFS_A02 {
            let v16 = phi(s, t, -0.2, 16);
            let v32 = phi(s, t, -0.2, 32);
            assert_relative_eq!(v16, v32, max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_exponent_is_overlap_area() {
        // int L(r) dr = (area of [ly,uy] x [lz,uz] seen through y-z = r) = |Iy||Iz|
        for &(s, t) in &[(0.3f64, 0.1f64), (-0.5, 0.2), (0.7, -0.7)] {
            let ly = s.max(0.0);
            let uy = (1.0 + s).min(1.0);
            let lz = t.max(0.0);
            let uz = (1.0 + t).min(1.0);
            let want = (uy - ly) * (uz - lz);
            assert_relative_eq!(phi(s, t, 0.0, 16), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn symmetric_in_interval_swap() {
        // Phi(s,t) = Phi(t,s): swapping the intervals mirrors r -> delta - r
        for &(s, t) in &[(0.3f64, 0.1f64), (-0.5, 0.2), (0.9, 0.85)] {
            assert_relative_eq!(phi(s, t, -0.2, 16), phi(t, s, -0.2, 16), max_relative = 1e-9);
        }
    }
}
