//! Dormand-Prince 5(4) integration of the noiseless drift.

use super::scheme::Trajectory;
use crate::error::{Error, Result};
use crate::model::{drift_fields, DriftVariant, ModelParams, State};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// States beyond this norm count as blown up.
    pub escape_norm: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-30, max_steps: 10_000_000, escape_norm: 1e200 }
    }
}

// The drift is autonomous, so the stage times are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type V2 = [f64; 2];

fn axpy(s: V2, h: f64, terms: &[(f64, V2)]) -> V2 {
    let mut out = s;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrates the noiseless drift from `s0` to `t_end`, recording every accepted step.
/// With `pure_hamiltonian` the dissipative terms are dropped.
pub fn ode_reference(p: &ModelParams, s0: State, t_end: f64, pure_hamiltonian: bool) -> Result<Trajectory> {
    ode_reference_with(p, s0, t_end, pure_hamiltonian, OdeOptions::default())
}

pub fn ode_reference_with(
    p: &ModelParams,
    s0: State,
    t_end: f64,
    pure_hamiltonian: bool,
    opts: OdeOptions,
) -> Result<Trajectory> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParams(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if !s0.is_finite() {
        return Err(Error::Input(format!("non-finite initial state {s0:?}")));
    }
    let model = if pure_hamiltonian {
        p.clone().with_variant(DriftVariant::PureHamiltonian)
    } else {
        p.clone()
    };
    let mut last_time = 0.0;
    let f = |s: V2, last: f64| -> Result<V2> {
        match drift_fields(&model, State::new(s[0], s[1])) {
            Ok(d) => Ok([d.fx, d.fy]),
            Err(Error::Overflow { .. }) => Err(Error::BlowUpDetected { last_time: last }),
            Err(e) => Err(e),
        }
    };

    let mut times = vec![0.0];
    let mut states = vec![s0];
    if t_end == 0.0 {
        return Ok(Trajectory { times, states, blowup_flag: false });
    }
    let mut t = 0.0;
    let mut y = [s0.x, s0.y];
    let mut k1 = f(y, t)?;
    let scale0 = opts.atol + opts.rtol * y[0].abs().max(y[1].abs());
    let fnorm = k1[0].abs().max(k1[1].abs());
    let mut h = if fnorm > 0.0 { (0.01 * scale0 / opts.rtol / fnorm).min(t_end) } else { t_end };
    h = h.max(1e-12 * t_end);

    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(Trajectory { times, states, blowup_flag: false });
        }
        h = h.min(t_end - t);
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::BlowUpDetected { last_time });
        }
        let k2 = f(axpy(y, h, &[(A21, k1)]), last_time)?;
        let k3 = f(axpy(y, h, &[(A31, k1), (A32, k2)]), last_time)?;
        let k4 = f(axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]), last_time)?;
        let k5 = f(axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]), last_time)?;
        let k6 = f(axpy(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]), last_time)?;
        let y_new = axpy(y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let k7 = match f(y_new, last_time) {
            Ok(k) => k,
            Err(_) => {
                h *= 0.2;
                continue;
            }
        };
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || !y_new[0].is_finite() || !y_new[1].is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            if y[0].abs().max(y[1].abs()) > opts.escape_norm {
                return Err(Error::BlowUpDetected { last_time: t });
            }
            last_time = t;
            times.push(t);
            states.push(State::new(y[0], y[1]));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Err(Error::BlowUpDetected { last_time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{deterministic_solution_unequal, Profile};
    use approx::assert_relative_eq;

    #[test]
    fn equal_exponents_exponential() {
        let p = ModelParams::new(2, 2, 2.0, 1.0, 1.0, Profile::Linear).unwrap();
        let t = ode_reference(&p, State::new(1.0, 1.0), 1.0, true).unwrap();
        let s = *t.states.last().unwrap();
        assert_eq!(*t.times.last().unwrap(), 1.0);
        assert!((s.x - 2f64.exp()).abs() < 1e-8);
        assert!((s.y - (-2f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn unequal_exponents_before_blowup() {
        let p = ModelParams::new(3, 2, 2.0, 1.0, 1.0, Profile::Linear).unwrap();
        let s0 = State::new(1.0, 1.0);
        let t = ode_reference(&p, s0, 0.9, true).unwrap();
        let exact = deterministic_solution_unequal(&p, s0, 0.9).unwrap();
        let s = *t.states.last().unwrap();
        assert_relative_eq!(s.x, exact.x, max_relative = 1e-7);
        assert_relative_eq!(s.y, exact.y, max_relative = 1e-7);
    }

    #[test]
    fn blowup_detected_near_one() {
        let p = ModelParams::new(3, 2, 2.0, 1.0, 1.0, Profile::Linear).unwrap();
        match ode_reference(&p, State::new(1.0, 1.0), 2.0, true) {
            Err(Error::BlowUpDetected { last_time }) => assert!((last_time - 1.0).abs() < 1e-4, "{last_time}"),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn zero_horizon() {
        let p = ModelParams::config_a();
        let t = ode_reference(&p, State::new(1.0, 2.0), 0.0, false).unwrap();
        assert_eq!(t.states, vec![State::new(1.0, 2.0)]);
    }

    #[test]
    fn perturbed_flow_stays_bounded() {
        let p = ModelParams::config_a();
        let t = ode_reference(&p, State::new(3.0, 3.0), 5.0, false).unwrap();
        assert!(t.states.iter().all(|s| s.norm() < 10.0));
    }
}
