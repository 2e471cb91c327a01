//! The fixed reparameterization used by concatenation.
//!
//! `r` is `0` on `[0, 0.1]`, `1` on `[0.9, 1]`, and the septic smoothstep
//! `S(u) = 35u⁴ − 84u⁵ + 70u⁶ − 20u⁷` in `u = (s − 0.1)/0.8` between.

use crate::error::Result;
use crate::flowengine::{CoeffCurve, UPoly};

pub const FLAT: f64 = 0.1;
const SPAN: f64 = 1.0 - 2.0 * FLAT;

fn smoothstep() -> UPoly {
    UPoly(vec![0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0])
}

/// `r(s)`.
pub fn r(s: f64) -> f64 {
    if s <= FLAT {
        0.0
    } else if s >= 1.0 - FLAT {
        1.0
    } else {
        smoothstep().eval((s - FLAT) / SPAN)
    }
}

/// `r′(s)`.
pub fn r_prime(s: f64) -> f64 {
    if s <= FLAT || s >= 1.0 - FLAT {
        0.0
    } else {
        smoothstep().deriv().eval((s - FLAT) / SPAN) / SPAN
    }
}

/// `u` in `[0, 1]` with `S(u) = v`, by bisection polished with Newton steps.
fn smoothstep_inverse(v: f64) -> f64 {
    let s = smoothstep();
    let ds = s.deriv();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if s.eval(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = ds.eval(u);
        if d.abs() < 1e-14 {
            break;
        }
        u = (u - (s.eval(u) - v) / d).clamp(0.0, 1.0);
    }
    u
}

/// `r⁻¹(v)` restricted to the interior `[0.1, 0.9]`.
pub fn r_inverse(v: f64) -> f64 {
    FLAT + SPAN * smoothstep_inverse(v)
}

/// Coefficients of `t ↦ 2 r′(2t − offset) X(r(2t − offset))` on the half
/// `[offset/2, offset/2 + 1/2]`, as (breakpoints, pieces) in local variables.
fn half(x: &CoeffCurve, offset: f64) -> (Vec<f64>, Vec<Vec<UPoly>>) {
    let q = x.q();
    let zero_row = vec![UPoly::zero(); q];
    let to_t = |s: f64| 0.5 * (s + offset);
    let mut bps = vec![to_t(0.0), to_t(FLAT)];
    let mut pieces = vec![zero_row.clone()];
    let sm = smoothstep();
    let dsm = sm.deriv();
    // interior breakpoints of X mapped through r⁻¹, as values of u
    let mut us = vec![0.0];
    us.extend(x.breakpoints()[1..x.num_pieces()].iter().map(|&b| smoothstep_inverse(b)));
    us.push(1.0);
    for (k, w) in us.windows(2).enumerate() {
        let (u0, u1) = (w[0], w[1]);
        // u as a function of the local variable on this new piece
        let u_of_w = UPoly::linear(u0, u1 - u0);
        let r_of_w = sm.compose(&u_of_w);
        let (a, b) = x.interval(k);
        let v_of_w = r_of_w.add(&UPoly::constant(-a)).scale(1.0 / (b - a));
        // 2 r′(2t) = 2 S′(u) / SPAN
        let factor = dsm.compose(&u_of_w).scale(2.0 / SPAN);
        let row = x.pieces()[k].iter().map(|p| factor.mul(&p.compose(&v_of_w)).trimmed()).collect();
        pieces.push(row);
        bps.push(to_t(FLAT + SPAN * u1));
    }
    bps.push(to_t(1.0));
    pieces.push(zero_row);
    (bps, pieces)
}

/// Coefficient curve of the concatenation: `X` runs on the first half and
/// `Y` on the second, each reparameterized by `r`.
pub fn concat_coeffs(y: &CoeffCurve, x: &CoeffCurve) -> Result<CoeffCurve> {
    let (mut bps, mut pieces) = half(x, 0.0);
    let (bps2, pieces2) = half(y, 1.0);
    bps.pop();
    bps.extend(bps2);
    pieces.extend(pieces2);
    // Guard against collapsed pieces when breakpoints sit at the flat ends.
    let mut keep_b = vec![bps[0]];
    let mut keep_p = Vec::new();
    for (k, p) in pieces.into_iter().enumerate() {
        if bps[k + 1] - *keep_b.last().unwrap() > 1e-13 {
            keep_b.push(bps[k + 1]);
            keep_p.push(p);
        }
    }
    *keep_b.last_mut().unwrap() = 1.0;
    CoeffCurve::new(keep_b, keep_p)
}
