//! Constant ledger for the local Lyapunov functions and their gluing.
//!
//! Solved in a fixed order: `rho -> b -> k2, k3 -> c1 -> c2, c3`, followed by an
//! independent assertion pass. `c2` and `c3` are obtained by inverting the caps
//! `C2 = (2 c1 / c2^(m-1))^(2/(n-1))` and `C3 = (2 c1 / c3^(n-1))^(2/(m-1))`
//! against the values the drift estimates need, `C2 = n / (b k2 (m+n))` and
//! `C3 = m / (b k3 (m+n))`.

use serde::{Deserialize, Serialize};

use super::cutoff;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Safety factor on `b` and on the closed-form lower bound for `c1`.
pub const SAFETY: f64 = 1.05;
const MAX_DOUBLINGS: u32 = 64;
const CAP_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConstants {
    pub a: f64,
    pub rho: f64,
    pub b: f64,
    pub k2: f64,
    pub k3: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    #[serde(rename = "C2")]
    pub cap2: f64,
    #[serde(rename = "C3")]
    pub cap3: f64,
    pub b12: f64,
    pub b13: f64,
}

/// One line of the assertion pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub relation: &'static str,
    pub rhs: f64,
    pub holds: bool,
}

impl InvariantCheck {
    fn gt(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, relation: ">", rhs, holds: lhs > rhs }
    }

    fn close(name: &'static str, lhs: f64, rhs: f64, rel: f64) -> Self {
        let holds = (lhs - rhs).abs() <= rel * lhs.abs().max(rhs.abs());
        Self { name, lhs, relation: "~=", rhs, holds }
    }
}

/// `4^(q/(q-1)) + 1`, the common factor of `k2` and `k3`.
pub fn k_factor(q: f64) -> f64 {
    4f64.powf(q / (q - 1.0)) + 1.0
}

/// `c2` from `c1` by inverting the `C2` cap.
pub fn c2_from_c1(c1: f64, cap2: f64, m: u32, n: u32) -> f64 {
    (2.0 * c1 * cap2.powf(-((n - 1) as f64) / 2.0)).powf(1.0 / (m - 1) as f64)
}

/// `c3` from `c1` by inverting the `C3` cap.
pub fn c3_from_c1(c1: f64, cap3: f64, m: u32, n: u32) -> f64 {
    (2.0 * c1 * cap3.powf(-((m - 1) as f64) / 2.0)).powf(1.0 / (n - 1) as f64)
}

/// Derives the full ledger with `rho` taken from the quintic cut-off.
pub fn derive_constants(p: &ModelParams) -> Result<LyapunovConstants> {
    derive_constants_with_rho(p, cutoff::rho())
}

/// Derives the ledger for a given cut-off bound `rho` (must exceed the cut-off's
/// own sup norms, otherwise the assertion pass fails).
pub fn derive_constants_with_rho(p: &ModelParams, rho: f64) -> Result<LyapunovConstants> {
    p.validate()?;
    if !(rho > 1.0) || !rho.is_finite() {
        return Err(Error::DerivationFailure(format!("rho must exceed 1, got {rho}")));
    }
    let (m, n) = (p.m as f64, p.n as f64);
    let a = p.a();
    let b = SAFETY * f64::max(4.001, 64.0 * rho * m * n);
    let kf = k_factor(p.q);
    let k2 = kf * n / (p.eps_y * p.eps_y);
    let k3 = kf * m / (p.eps_x * p.eps_x);
    let cap2 = n / (b * k2 * (m + n));
    let cap3 = m / (b * k3 * (m + n));
    let b13 = 80.0 * p.eps_x * p.eps_x * rho * m * m * k3;
    let b12 = 80.0 * p.eps_y * p.eps_y * rho * n * n * k2;

    let lower_bounds = [
        4f64.powf(1.0 / (p.q - 1.0)) / a,
        4.0 * b13.sqrt() / a,
        4.0 * b12.sqrt() / a,
        // c3^2 > 6/k3 rewritten as a bound on c1 through the C3 inversion
        0.5 * (6.0 / k3).powf((n - 1.0) / 2.0) * cap3.powf((m - 1.0) / 2.0),
        0.5 * (6.0 / k2).powf((m - 1.0) / 2.0) * cap2.powf((n - 1.0) / 2.0),
    ];
    let mut c1 = SAFETY * lower_bounds.iter().copied().fold(0.0, f64::max);

    for _ in 0..=MAX_DOUBLINGS {
        let k = LyapunovConstants {
            a,
            rho,
            b,
            k2,
            k3,
            c1,
            c2: c2_from_c1(c1, cap2, p.m, p.n),
            c3: c3_from_c1(c1, cap3, p.m, p.n),
            cap2,
            cap3,
            b12,
            b13,
        };
        let checks = k.check_invariants(p);
        if checks.iter().all(|c| c.holds) {
            return Ok(k);
        }
        // Only c1-dependent checks can be repaired by enlarging c1.
        let structural = checks
            .iter()
            .filter(|c| !c.holds)
            .find(|c| !c1_repairable(c.name));
        if let Some(bad) = structural {
            return Err(Error::DerivationFailure(format!(
                "invariant '{}' fails: {} {} {}",
                bad.name, bad.lhs, bad.relation, bad.rhs
            )));
        }
        c1 *= 2.0;
    }
    Err(Error::DerivationFailure(format!(
        "no admissible c1 after {MAX_DOUBLINGS} doublings"
    )))
}

fn c1_repairable(name: &str) -> bool {
    matches!(
        name,
        "c1 > 4^(1/(q-1))/a"
            | "a^2 c1^2 > 16 b13"
            | "a^2 c1^2 > 16 b12"
            | "c3^2 > 6/k3"
            | "c2^2 > 6/k2"
            | "c2^(m-1) c3^(n-1) > 2 c1"
    )
}

impl LyapunovConstants {
    /// Independent assertion pass: recomputes every defining relation from the
    /// model parameters and compares it with the stored ledger.
    pub fn check_invariants(&self, p: &ModelParams) -> Vec<InvariantCheck> {
        let (m, n) = (p.m as f64, p.n as f64);
        let kf = 4f64.powf(p.q / (p.q - 1.0)) + 1.0;
        let bounds = cutoff::bounds();
        let sup_phi = bounds.max_value.max(bounds.max_d1).max(bounds.max_d2);
        let a2c1 = (self.a * self.c1).powi(2);
        vec![
            InvariantCheck::close("a = declared |h'| bound", self.a, p.a(), 0.0),
            InvariantCheck::gt("rho > 1", self.rho, 1.0),
            InvariantCheck::gt("rho > sup{|phi|,|phi'|,|phi''|}", self.rho, sup_phi),
            InvariantCheck::close("k2 = (4^(q/(q-1))+1) n/eps_y^2", self.k2, kf * n / (p.eps_y * p.eps_y), 1e-12),
            InvariantCheck::close("k3 = (4^(q/(q-1))+1) m/eps_x^2", self.k3, kf * m / (p.eps_x * p.eps_x), 1e-12),
            InvariantCheck::gt("b > 4", self.b, 4.0),
            InvariantCheck::gt("b > 64 rho m n", self.b, 64.0 * self.rho * m * n),
            InvariantCheck::close("C2 = n/(b k2 (m+n))", self.cap2, n / (self.b * self.k2 * (m + n)), 1e-12),
            InvariantCheck::close("C3 = m/(b k3 (m+n))", self.cap3, m / (self.b * self.k3 * (m + n)), 1e-12),
            InvariantCheck::close(
                "(2 c1 / c2^(m-1))^(2/(n-1)) = C2",
                (2.0 * self.c1 / self.c2.powi(p.m as i32 - 1)).powf(2.0 / (n - 1.0)),
                self.cap2,
                CAP_REL_TOL,
            ),
            InvariantCheck::close(
                "(2 c1 / c3^(n-1))^(2/(m-1)) = C3",
                (2.0 * self.c1 / self.c3.powi(p.n as i32 - 1)).powf(2.0 / (m - 1.0)),
                self.cap3,
                CAP_REL_TOL,
            ),
            InvariantCheck::close("b13 = 80 eps_x^2 rho m^2 k3", self.b13, 80.0 * p.eps_x * p.eps_x * self.rho * m * m * self.k3, 1e-12),
            InvariantCheck::close("b12 = 80 eps_y^2 rho n^2 k2", self.b12, 80.0 * p.eps_y * p.eps_y * self.rho * n * n * self.k2, 1e-12),
            InvariantCheck::gt("c1 > 4^(1/(q-1))/a", self.c1, 4f64.powf(1.0 / (p.q - 1.0)) / self.a),
            InvariantCheck::gt("a^2 c1^2 > 16 b13", a2c1, 16.0 * self.b13),
            InvariantCheck::gt("a^2 c1^2 > 16 b12", a2c1, 16.0 * self.b12),
            InvariantCheck::gt("c3^2 > 6/k3", self.c3 * self.c3, 6.0 / self.k3),
            InvariantCheck::gt("c2^2 > 6/k2", self.c2 * self.c2, 6.0 / self.k2),
            InvariantCheck::gt(
                "c2^(m-1) c3^(n-1) > 2 c1",
                self.c2.powi(p.m as i32 - 1) * self.c3.powi(p.n as i32 - 1),
                2.0 * self.c1,
            ),
        ]
    }

    pub fn all_invariants_hold(&self, p: &ModelParams) -> bool {
        self.check_invariants(p).iter().all(|c| c.holds)
    }

    /// Replaces one named constant, e.g. `c1`; used to sabotage a ledger on purpose.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "a" => &mut self.a,
            "rho" => &mut self.rho,
            "b" => &mut self.b,
            "k2" => &mut self.k2,
            "k3" => &mut self.k3,
            "c1" => &mut self.c1,
            "c2" => &mut self.c2,
            "c3" => &mut self.c3,
            "C2" => &mut self.cap2,
            "C3" => &mut self.cap3,
            "b12" => &mut self.b12,
            "b13" => &mut self.b13,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown ledger constant '{other}'"
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn is_constant_name(key: &str) -> bool {
        matches!(
            key,
            "a" | "rho" | "b" | "k2" | "k3" | "c1" | "c2" | "c3" | "C2" | "C3" | "b12" | "b13"
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Profile;
    use approx::assert_relative_eq;

    #[test]
    fn config_a_k_values() {
        let k = derive_constants(&ModelParams::config_a()).unwrap();
        assert_eq!(k.k2, 51.0);
        assert_eq!(k.k3, 34.0);
    }

    #[test]
    fn config_a_with_rho_1_1() {
        let p = ModelParams::config_a();
        let k = derive_constants_with_rho(&p, 1.1).unwrap();
        assert_relative_eq!(k.b, 1.05 * 422.4, max_relative = 1e-14);
        assert_relative_eq!(k.b13, 11_968.0, max_relative = 1e-14);
        assert!(k.c1 >= 4.0 * 11_968f64.sqrt());
        assert!(k.c1 >= 437.6);
        assert!(k.all_invariants_hold(&p));
    }

    #[test]
    fn constant_identities() {
        for (m, n, q, ex, ey) in [(2, 3, 2.0, 1.0, 1.0), (5, 2, 1.5, 0.3, 2.0), (3, 3, 3.0, 10.0, 10.0)] {
            let p = ModelParams::new(m, n, q, ex, ey, Profile::Linear).unwrap();
            let k = derive_constants(&p).unwrap();
            let f = k_factor(q);
            assert_relative_eq!(k.k2 * ey * ey / n as f64, f, max_relative = 1e-14);
            assert_relative_eq!(k.k3 * ex * ex / m as f64, f, max_relative = 1e-14);
            assert!(k.all_invariants_hold(&p), "{:?}", k.check_invariants(&p));
        }
    }

    #[test]
    fn config_a_ledger_values() {
        let k = derive_constants(&ModelParams::config_a()).unwrap();
        assert_relative_eq!(k.rho, 1.05, max_relative = 1e-15);
        assert_relative_eq!(k.b, 1.05 * 64.0 * 1.05 * 6.0, max_relative = 1e-14);
        // b12 dominates the c1 lower bounds for config-A.
        let b12 = 80.0 * 1.05 * 9.0 * 51.0;
        assert_relative_eq!(k.b12, b12, max_relative = 1e-14);
        assert_relative_eq!(k.c1, 1.05 * 4.0 * f64::sqrt(b12), max_relative = 1e-14);
    }

    #[test]
    fn sabotage_detected() {
        let p = ModelParams::config_a();
        let mut k = derive_constants(&p).unwrap();
        k.set("c1", 0.1).unwrap();
        assert!(!k.all_invariants_hold(&p));
        assert!(k.set("zeta", 1.0).is_err());
    }

    #[test]
    fn small_rho_rejected() {
        let p = ModelParams::config_a();
        assert!(derive_constants_with_rho(&p, 0.9).is_err());
        // rho = 1 is not above the cut-off's sup of 1.
        assert!(derive_constants_with_rho(&p, 1.0).is_err());
    }
}
