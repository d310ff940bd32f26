use serde::Serialize;

use super::constants::LyapunovConstants;
use super::cutoff::{phi, smoothstep};
use crate::error::{Error, Result};
use crate::model::{drift_fields, ipow, ModelParams, State};

/// Value and the partials the generator needs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LyapunovValue {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
}

impl LyapunovValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.dx.is_finite()
            && self.dy.is_finite()
            && self.dxx.is_finite()
            && self.dyy.is_finite()
    }
}

/// `x^2 + y^2`
pub fn v1(s: State) -> LyapunovValue {
    LyapunovValue {
        value: s.x * s.x + s.y * s.y,
        dx: 2.0 * s.x,
        dy: 2.0 * s.y,
        dxx: 2.0,
        dyy: 2.0,
    }
}

/// `x^2 (1 - k2 y^2)`
pub fn v2(k: &LyapunovConstants, s: State) -> LyapunovValue {
    let g = 1.0 - k.k2 * s.y * s.y;
    LyapunovValue {
        value: s.x * s.x * g,
        dx: 2.0 * s.x * g,
        dy: -2.0 * k.k2 * s.x * s.x * s.y,
        dxx: 2.0 * g,
        dyy: -2.0 * k.k2 * s.x * s.x,
    }
}

/// `y^2 (1 - k3 x^2)`
pub fn v3(k: &LyapunovConstants, s: State) -> LyapunovValue {
    let g = 1.0 - k.k3 * s.x * s.x;
    LyapunovValue {
        value: s.y * s.y * g,
        dx: -2.0 * k.k3 * s.y * s.y * s.x,
        dy: 2.0 * s.y * g,
        dxx: -2.0 * k.k3 * s.y * s.y,
        dyy: 2.0 * g,
    }
}

/// `(|x|^(m-1) |y|^(n-1) / c1)^2`
pub fn lambda_fn(k: &LyapunovConstants, m: u32, n: u32, s: State) -> f64 {
    let r = ipow(s.x.abs(), m - 1) * ipow(s.y.abs(), n - 1) / k.c1;
    r * r
}

/// `lambda` together with `lambda/x`, `lambda/x^2`, `lambda/y`, `lambda/y^2`,
/// each evaluated as a polynomial so the axes need no division.
#[derive(Clone, Copy, Debug)]
struct LambdaJet {
    lam: f64,
    over_x: f64,
    over_x2: f64,
    over_y: f64,
    over_y2: f64,
}

fn lambda_jet(k: &LyapunovConstants, m: u32, n: u32, s: State) -> LambdaJet {
    let (x, y) = (s.x, s.y);
    let r = ipow(x, m - 1) * ipow(y, n - 1) / k.c1;
    let rx = ipow(x, m - 2) * ipow(y, n - 1) / k.c1;
    let ry = ipow(x, m - 1) * ipow(y, n - 2) / k.c1;
    LambdaJet {
        lam: r * r,
        over_x: r * rx,
        over_x2: rx * rx,
        over_y: r * ry,
        over_y2: ry * ry,
    }
}

/// Partials of `Psi = 1 - phi(lambda)`.
#[derive(Clone, Copy, Debug)]
struct CutoffJet {
    phi: f64,
    dx: f64,
    dy: f64,
    dxx: f64,
    dyy: f64,
}

fn cutoff_jet(j: &LambdaJet, m: u32, n: u32) -> CutoffJet {
    let c = phi(j.lam);
    let (am, an) = (2.0 * (m - 1) as f64, 2.0 * (n - 1) as f64);
    // d(lambda)/dx = am lambda/x, d2(lambda)/dx2 = am (am - 1) lambda/x^2
    CutoffJet {
        phi: c.value,
        dx: c.d1 * am * j.over_x,
        dy: c.d1 * an * j.over_y,
        dxx: c.d2 * am * am * j.lam * j.over_x2 + c.d1 * (am * am - am) * j.over_x2,
        dyy: c.d2 * an * an * j.lam * j.over_y2 + c.d1 * (an * an - an) * j.over_y2,
    }
}

/// Which local function is blended with `v1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlendTarget {
    V2,
    V3,
}

/// `phi(lambda) v1 + (1 - phi(lambda)) vi` with partials from the chain rule.
pub fn v_blend(target: BlendTarget, p: &ModelParams, k: &LyapunovConstants, s: State) -> LyapunovValue {
    let j = lambda_jet(k, p.m, p.n, s);
    let base = v1(s);
    let vi = match target {
        BlendTarget::V2 => v2(k, s),
        BlendTarget::V3 => v3(k, s),
    };
    if j.lam >= super::cutoff::UPPER_KNOT {
        return base;
    }
    if j.lam <= super::cutoff::LOWER_KNOT {
        return vi;
    }
    let c = cutoff_jet(&j, p.m, p.n);
    let d = LyapunovValue {
        value: base.value - vi.value,
        dx: base.dx - vi.dx,
        dy: base.dy - vi.dy,
        dxx: base.dxx - vi.dxx,
        dyy: base.dyy - vi.dyy,
    };
    let (f, g) = (c.phi, 1.0 - c.phi);
    LyapunovValue {
        value: f * base.value + g * vi.value,
        dx: c.dx * d.value + f * base.dx + g * vi.dx,
        dy: c.dy * d.value + f * base.dy + g * vi.dy,
        dxx: c.dxx * d.value + 2.0 * c.dx * d.dx + f * base.dxx + g * vi.dxx,
        dyy: c.dyy * d.value + 2.0 * c.dy * d.dy + f * base.dyy + g * vi.dyy,
    }
}

/// Closed form of `L v1`, with `|w|^q` in the dissipative terms.
pub fn analytic_lv1(p: &ModelParams, s: State) -> Result<f64> {
    let d = drift_fields(p, s)?;
    let (m, n) = (p.m as f64, p.n as f64);
    let uq = match p.variant {
        crate::model::DriftVariant::Perturbed => d.u.powf(p.q),
        crate::model::DriftVariant::PureHamiltonian => 0.0,
    };
    Ok(2.0 * n * s.x * s.x * (d.w - uq)
        + p.eps_x * p.eps_x
        + 2.0 * m * s.y * s.y * (-d.w - uq)
        + p.eps_y * p.eps_y)
}

/// Global Lyapunov function
///
/// ```text
/// V = 1 + phi(lambda) v1 + (1 - phi(lambda)) W,
/// W = chi2(x) v2 + chi3(y) v3 + (1 - chi2 - chi3) v1
/// ```
///
/// `chi2` rises from 0 at `|x| = theta2 c2` to 1 at `|x| = c2` (quintic), `chi3`
/// likewise in `|y|`. Where `lambda < 4` their supports are disjoint, so `W` is a
/// convex combination of non-negative functions and `V >= 1`. On the bounded set
/// with `|x| < c2`, `|y| < c3` the function falls back to `1 + v1`.
#[derive(Clone, Debug, Serialize)]
pub struct GlobalLyapunov {
    pub m: u32,
    pub n: u32,
    pub constants: LyapunovConstants,
    pub theta2: f64,
    pub theta3: f64,
}

impl GlobalLyapunov {
    pub fn new(p: &ModelParams, k: &LyapunovConstants) -> Result<Self> {
        let (m, n) = (p.m as f64, p.n as f64);
        // On |x| >= theta2 c2 with lambda < 4 this keeps k2 y^2 <= 1/4.
        let theta2 = f64::max(0.5, (4.0 * n / (k.b * (m + n))).powf((n - 1.0) / (2.0 * (m - 1.0))));
        let theta3 = f64::max(0.5, (4.0 * m / (k.b * (m + n))).powf((m - 1.0) / (2.0 * (n - 1.0))));
        if !(theta2 < 1.0 && theta3 < 1.0) {
            return Err(Error::Assembly(format!(
                "degenerate transition bands (theta2 = {theta2}, theta3 = {theta3})"
            )));
        }
        let corner = (theta2 * k.c2).powi(p.m as i32 - 1) * (theta3 * k.c3).powi(p.n as i32 - 1);
        if !(corner >= 2.0 * k.c1) {
            return Err(Error::Assembly(format!(
                "supports of the v2 and v3 patches overlap: (theta2 c2)^(m-1) (theta3 c3)^(n-1) = {corner} < 2 c1 = {}",
                2.0 * k.c1
            )));
        }
        Ok(Self {
            m: p.m,
            n: p.n,
            constants: k.clone(),
            theta2,
            theta3,
        })
    }

    /// Scale of the decomposition, `max(c2, c3)`.
    pub fn scale(&self) -> f64 {
        self.constants.c2.max(self.constants.c3)
    }

    fn chi(&self, t: f64, c: f64, theta: f64) -> (f64, f64, f64) {
        let lo = theta * c;
        let width = c - lo;
        let (v, d1, d2) = smoothstep((t.abs() - lo) / width);
        (v, t.signum() * d1 / width, d2 / (width * width))
    }

    pub fn eval(&self, s: State) -> LyapunovValue {
        let k = &self.constants;
        let (x, y) = (s.x, s.y);
        let base = v1(s);
        let j = lambda_jet(k, self.m, self.n, s);
        if j.lam >= super::cutoff::UPPER_KNOT {
            return LyapunovValue { value: 1.0 + base.value, ..base };
        }
        let (c2v, c2d, c2dd) = self.chi(x, k.c2, self.theta2);
        let (c3v, c3d, c3dd) = self.chi(y, k.c3, self.theta3);

        // v1 - v2 = y^2 (1 + k2 x^2), v1 - v3 = x^2 (1 + k3 y^2)
        let d2 = y * y * (1.0 + k.k2 * x * x);
        let d2x = 2.0 * k.k2 * x * y * y;
        let d2xx = 2.0 * k.k2 * y * y;
        let d2y = 2.0 * y * (1.0 + k.k2 * x * x);
        let d2yy = 2.0 * (1.0 + k.k2 * x * x);
        let d3 = x * x * (1.0 + k.k3 * y * y);
        let d3x = 2.0 * x * (1.0 + k.k3 * y * y);
        let d3xx = 2.0 * (1.0 + k.k3 * y * y);
        let d3y = 2.0 * k.k3 * x * x * y;
        let d3yy = 2.0 * k.k3 * x * x;

        // G = chi2 (v1 - v2) + chi3 (v1 - v3), so W = v1 - G
        let g = c2v * d2 + c3v * d3;
        let gx = c2d * d2 + c2v * d2x + c3v * d3x;
        let gxx = c2dd * d2 + 2.0 * c2d * d2x + c2v * d2xx + c3v * d3xx;
        let gy = c3d * d3 + c3v * d3y + c2v * d2y;
        let gyy = c3dd * d3 + 2.0 * c3d * d3y + c3v * d3yy + c2v * d2yy;

        // Psi = 1 - phi(lambda); V = 1 + v1 - Psi G
        let (psi, px, py, pxx, pyy) = if j.lam <= super::cutoff::LOWER_KNOT {
            (1.0, 0.0, 0.0, 0.0, 0.0)
        } else {
            let c = cutoff_jet(&j, self.m, self.n);
            (1.0 - c.phi, -c.dx, -c.dy, -c.dxx, -c.dyy)
        };
        LyapunovValue {
            value: 1.0 + base.value - psi * g,
            dx: base.dx - (px * g + psi * gx),
            dy: base.dy - (py * g + psi * gy),
            dxx: base.dxx - (pxx * g + 2.0 * px * gx + psi * gxx),
            dyy: base.dyy - (pyy * g + 2.0 * py * gy + psi * gyy),
        }
    }
}

/// One-shot evaluation of the global function.
pub fn global_v(p: &ModelParams, k: &LyapunovConstants, s: State) -> Result<LyapunovValue> {
    Ok(GlobalLyapunov::new(p, k)?.eval(s))
}
