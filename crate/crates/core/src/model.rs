//! The two-dimensional system
//!
//! ```text
//! dx = (w - |w|^q) n x dt + eps_x dB1
//! dy = (-w - |w|^q) m y dt + eps_y dB2,      w = h'(x^m y^n) x^(m-1) y^(n-1)
//! ```
//!
//! together with its generator and the closed-form solutions of the
//! noiseless Hamiltonian flow `H(x, y) = h(x^m y^n)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::LyapunovValue;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Point in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub const ORIGIN: State = State { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(&self, other: &State) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for State {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Hamiltonian profile `h` and its derivative.
#[derive(Clone)]
pub enum Profile {
    /// `h(t) = t`
    Linear,
    /// `h(t) = -t`
    NegLinear,
    /// `h(t) = t + 0.5 sin t`
    SinePerturbed,
    /// User supplied `h'` (and optionally `h`) with a declared lower bound on `|h'|`.
    Custom {
        name: String,
        h: Option<ScalarFn>,
        h_prime: ScalarFn,
        a: f64,
    },
}

impl Profile {
    pub fn custom(
        name: impl Into<String>,
        h: Option<ScalarFn>,
        h_prime: ScalarFn,
        a: f64,
    ) -> Self {
        Profile::Custom {
            name: name.into(),
            h,
            h_prime,
            a,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "linear" | "t" | "+t" => Ok(Profile::Linear),
            "neg-linear" | "-t" => Ok(Profile::NegLinear),
            "sine-perturbed" | "t+0.5sin" => Ok(Profile::SinePerturbed),
            other => Err(Error::InvalidParams(format!(
                "unknown h profile '{other}' (expected linear, neg-linear or sine-perturbed)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Profile::Linear => "linear",
            Profile::NegLinear => "neg-linear",
            Profile::SinePerturbed => "sine-perturbed",
            Profile::Custom { name, .. } => name,
        }
    }

    pub fn h(&self, t: f64) -> Option<f64> {
        match self {
            Profile::Linear => Some(t),
            Profile::NegLinear => Some(-t),
            Profile::SinePerturbed => Some(t + 0.5 * t.sin()),
            Profile::Custom { h, .. } => h.as_ref().map(|h| h(t)),
        }
    }

    #[inline]
    pub fn h_prime(&self, t: f64) -> f64 {
        match self {
            Profile::Linear => 1.0,
            Profile::NegLinear => -1.0,
            Profile::SinePerturbed => 1.0 + 0.5 * t.cos(),
            Profile::Custom { h_prime, .. } => h_prime(t),
        }
    }

    /// Declared lower bound on `|h'|`.
    pub fn a(&self) -> f64 {
        match self {
            Profile::Linear | Profile::NegLinear => 1.0,
            Profile::SinePerturbed => 0.5,
            Profile::Custom { a, .. } => *a,
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile")
            .field("name", &self.name())
            .field("a", &self.a())
            .finish()
    }
}

/// Which drift the model integrates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftVariant {
    /// Full drift with the dissipative `|w|^q` terms.
    #[default]
    Perturbed,
    /// Hamiltonian flow only (`q`-terms dropped).
    PureHamiltonian,
}

/// Serializable description of a parameter set (the profile by name).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamsSummary {
    pub m: u32,
    pub n: u32,
    pub q: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    pub profile: String,
    pub a: f64,
    pub variant: DriftVariant,
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub m: u32,
    pub n: u32,
    pub q: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    pub profile: Profile,
    pub variant: DriftVariant,
}

impl ModelParams {
    /// Builds and validates a parameter set.
    pub fn new(m: u32, n: u32, q: f64, eps_x: f64, eps_y: f64, profile: Profile) -> Result<Self> {
        let p = Self {
            m,
            n,
            q,
            eps_x,
            eps_y,
            profile,
            variant: DriftVariant::Perturbed,
        };
        p.validate()?;
        Ok(p)
    }

    /// `m = 2, n = 3, q = 2, eps = 1, h(t) = t`.
    pub fn config_a() -> Self {
        Self::new(2, 3, 2.0, 1.0, 1.0, Profile::Linear).expect("config-A is valid")
    }

    pub fn with_variant(mut self, variant: DriftVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn a(&self) -> f64 {
        self.profile.a()
    }

    pub fn summary(&self) -> ParamsSummary {
        ParamsSummary {
            m: self.m,
            n: self.n,
            q: self.q,
            eps_x: self.eps_x,
            eps_y: self.eps_y,
            profile: self.profile.name().to_string(),
            a: self.a(),
            variant: self.variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "exponents must be integers >= 2 (got m = {}, n = {}); the exponent assumption requires q, m, n > 1",
                self.m, self.n
            )));
        }
        if !(self.q > 1.0) || !self.q.is_finite() {
            return Err(Error::InvalidParams(format!(
                "q must be a finite real > 1 (got {}); the exponent assumption requires q, m, n > 1",
                self.q
            )));
        }
        for (name, eps) in [("eps_x", self.eps_x), ("eps_y", self.eps_y)] {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be a finite real > 0 (got {eps})"
                )));
            }
        }
        let a = self.a();
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParams(format!(
                "declared lower bound a on |h'| must be > 0 (got {a})"
            )));
        }
        for t in probe_grid() {
            let d = self.profile.h_prime(t);
            if !(d.abs() >= a) {
                return Err(Error::InvalidParams(format!(
                    "|h'({t})| = {} violates the declared bound a = {a}",
                    d.abs()
                )));
            }
        }
        if let Profile::Custom { h: Some(h), h_prime, .. } = &self.profile {
            for t in probe_grid().filter(|t| t.abs() <= 1e3) {
                let step = 1e-4 * t.abs().max(1.0);
                let fd = (h(t + step) - h(t - step)) / (2.0 * step);
                let exact = h_prime(t);
                let tol = 1e-6 * exact.abs().max(1.0) * t.abs().max(1.0);
                if !((fd - exact).abs() <= tol) {
                    return Err(Error::InvalidParams(format!(
                        "supplied h' does not match the derivative of h at t = {t}: finite difference {fd}, h' = {exact}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Wide set of `t` values used to probe `|h'| >= a`.
fn probe_grid() -> impl Iterator<Item = f64> {
    let linear = (-5000..=5000).map(|k| k as f64 * 0.01);
    let decades = (-8..=15).flat_map(|e| {
        let v = 10f64.powi(e);
        [v, -v, 3.7 * v, -3.7 * v]
    });
    linear.chain(decades)
}

/// Drift components at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftFields {
    /// `h'(x^m y^n) x^(m-1) y^(n-1)`
    pub w: f64,
    /// `|w|`
    pub u: f64,
    pub fx: f64,
    pub fy: f64,
}

#[inline]
pub(crate) fn ipow(base: f64, exp: u32) -> f64 {
    base.powi(exp as i32)
}

#[inline]
fn finite(v: f64, monomial: &'static str, s: State) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow {
            monomial,
            x: s.x,
            y: s.y,
        })
    }
}

pub fn drift_fields(p: &ModelParams, s: State) -> Result<DriftFields> {
    let xm1 = finite(ipow(s.x, p.m - 1), "x^(m-1)", s)?;
    let yn1 = finite(ipow(s.y, p.n - 1), "y^(n-1)", s)?;
    let mono = finite(xm1 * yn1, "x^(m-1) y^(n-1)", s)?;
    let arg = finite(mono * s.x * s.y, "x^m y^n", s)?;
    let w = finite(p.profile.h_prime(arg) * mono, "w", s)?;
    let u = w.abs();
    let (fx, fy) = match p.variant {
        DriftVariant::Perturbed => {
            let uq = finite(u.powf(p.q), "|w|^q", s)?;
            (
                (w - uq) * p.n as f64 * s.x,
                (-w - uq) * p.m as f64 * s.y,
            )
        }
        DriftVariant::PureHamiltonian => (w * p.n as f64 * s.x, -w * p.m as f64 * s.y),
    };
    Ok(DriftFields {
        w,
        u,
        fx: finite(fx, "x-drift", s)?,
        fy: finite(fy, "y-drift", s)?,
    })
}

/// Applies the generator to a test function given through its value and partials at `s`.
pub fn generator_apply(p: &ModelParams, f: &LyapunovValue, s: State) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::Input(format!(
            "non-finite partials passed to the generator: {f:?}"
        )));
    }
    let d = drift_fields(p, s)?;
    let out = d.fx * f.dx
        + 0.5 * p.eps_x * p.eps_x * f.dxx
        + d.fy * f.dy
        + 0.5 * p.eps_y * p.eps_y * f.dyy;
    finite(out, "generator", s)
}

/// `H(x, y) = h(x^m y^n)`.
pub fn hamiltonian(p: &ModelParams, s: State) -> Result<f64> {
    let arg = ipow(s.x, p.m) * ipow(s.y, p.n);
    let arg = finite(arg, "x^m y^n", s)?;
    p.profile.h(arg).ok_or_else(|| {
        Error::Unsupported(format!(
            "profile '{}' carries no h, only h'",
            p.profile.name()
        ))
    })
}

/// Closed-form global solution of the Hamiltonian flow when `m = n`.
pub fn deterministic_solution_equal(p: &ModelParams, s0: State, t: f64) -> Result<State> {
    if p.m != p.n {
        return Err(Error::WrongRegime(format!(
            "the exponential closed form needs m = n (got m = {}, n = {})",
            p.m, p.n
        )));
    }
    if !t.is_finite() {
        return Err(Error::Input(format!("time must be finite, got {t}")));
    }
    let m = p.m;
    let mono = ipow(s0.x, m - 1) * ipow(s0.y, m - 1);
    let rate = p.profile.h_prime(mono * s0.x * s0.y) * m as f64 * mono;
    let s = State::new(s0.x * (rate * t).exp(), s0.y * (-rate * t).exp());
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::Overflow {
            monomial: "exp(rate t)",
            x: s0.x,
            y: s0.y,
        })
    }
}

/// `K = h'(x0^m y0^n) (m - n) x0^(m-1) y0^(n-1)`, the coefficient in `1 - K t`.
fn blowup_coefficient(p: &ModelParams, s0: State) -> f64 {
    let mono = ipow(s0.x, p.m - 1) * ipow(s0.y, p.n - 1);
    p.profile.h_prime(mono * s0.x * s0.y) * (p.m as f64 - p.n as f64) * mono
}

/// Closed-form solution of the Hamiltonian flow when `m != n`, valid before blow-up.
pub fn deterministic_solution_unequal(p: &ModelParams, s0: State, t: f64) -> Result<State> {
    if p.m == p.n {
        return Err(Error::WrongRegime(
            "the blow-up closed form needs m != n; for m = n the flow is global".into(),
        ));
    }
    if !t.is_finite() {
        return Err(Error::Input(format!("time must be finite, got {t}")));
    }
    let k = blowup_coefficient(p, s0);
    let base = 1.0 - k * t;
    if !(base > 0.0) {
        return Err(Error::BlowUp { t_star: 1.0 / k });
    }
    let (m, n) = (p.m as f64, p.n as f64);
    let s = State::new(
        s0.x * base.powf(n / (n - m)),
        s0.y * base.powf(m / (m - n)),
    );
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::BlowUp { t_star: 1.0 / k })
    }
}

/// Forward blow-up time of the Hamiltonian flow for `m != n`; `None` when the
/// forward solution is global.
pub fn blowup_time(p: &ModelParams, s0: State) -> Result<Option<f64>> {
    if p.m == p.n {
        return Err(Error::WrongRegime(
            "m = n: the Hamiltonian flow has global solutions and no blow-up time".into(),
        ));
    }
    let k = blowup_coefficient(p, s0);
    let t_star = 1.0 / k;
    Ok((k > 0.0 && t_star.is_finite() && t_star > 0.0).then_some(t_star))
}
