//! Smooth cut-off `phi`: 0 on `|t| <= 1`, 1 on `|t| >= 4`, quintic smoothstep in between.

use serde::Serialize;

pub const LOWER_KNOT: f64 = 1.0;
pub const UPPER_KNOT: f64 = 4.0;

/// Safety factor applied to the sampled derivative bounds when forming `rho`.
const RHO_MARGIN: f64 = 1.05;

/// Value and first two derivatives of the cut-off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3` on `[0, 1]` with its derivatives in `s`.
#[inline]
pub(crate) fn smoothstep(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let s2 = s * s;
        let value = s2 * s * (10.0 + s * (6.0 * s - 15.0));
        let d1 = 30.0 * s2 * (1.0 - s) * (1.0 - s);
        let d2 = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
        (value, d1, d2)
    }
}

/// Evaluates the cut-off. The function is even, so `t <= -4` maps to 1.
pub fn phi(t: f64) -> Cutoff {
    let a = t.abs();
    if a <= LOWER_KNOT {
        return Cutoff { value: 0.0, d1: 0.0, d2: 0.0 };
    }
    if a >= UPPER_KNOT {
        return Cutoff { value: 1.0, d1: 0.0, d2: 0.0 };
    }
    let width = UPPER_KNOT - LOWER_KNOT;
    let (v, d1, d2) = smoothstep((a - LOWER_KNOT) / width);
    Cutoff {
        value: v,
        d1: t.signum() * d1 / width,
        d2: d2 / (width * width),
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CutoffBounds {
    pub kind: &'static str,
    pub lower_knot: f64,
    pub upper_knot: f64,
    pub max_value: f64,
    pub max_d1: f64,
    pub max_d2: f64,
    pub rho: f64,
}

/// Sup-norm bounds on `phi`, `phi'`, `phi''` from a fine grid, and
/// `rho = 1.05 * max(1, max|phi'|, max|phi''|)`.
pub fn bounds() -> CutoffBounds {
    const GRID: usize = 200_000;
    let (mut v, mut d1, mut d2) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..=GRID {
        let t = LOWER_KNOT + (UPPER_KNOT - LOWER_KNOT) * k as f64 / GRID as f64;
        let c = phi(t);
        v = v.max(c.value.abs());
        d1 = d1.max(c.d1.abs());
        d2 = d2.max(c.d2.abs());
    }
    CutoffBounds {
        kind: "quintic smoothstep",
        lower_knot: LOWER_KNOT,
        upper_knot: UPPER_KNOT,
        max_value: v,
        max_d1: d1,
        max_d2: d2,
        rho: RHO_MARGIN * v.max(d1).max(d2).max(1.0),
    }
}

pub fn rho() -> f64 {
    bounds().rho
}
