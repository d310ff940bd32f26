use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::NoiseStream;
use crate::error::{Error, Result};
use crate::model::{drift_fields, ModelParams, State};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    TamedEuler,
    Euler,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
    /// Keep every `thin`-th state of a trajectory.
    #[serde(default = "one")]
    pub thin: u64,
}

fn one() -> u64 {
    1
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64, steps: u64, seed: u64) -> Self {
        Self { scheme, dt, steps, seed, thin: 1 }
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParams("steps must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParams("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// Step index of time `t`, which must lie on the grid.
    pub fn step_of(&self, t: f64) -> Result<u64> {
        let k = (t / self.dt).round();
        if !(k >= 0.0) || (k * self.dt - t).abs() > 1e-9 * t.abs().max(self.dt) || k as u64 > self.steps {
            return Err(Error::InvalidParams(format!(
                "checkpoint t = {t} is not on the step grid (dt = {}, steps = {})",
                self.dt, self.steps
            )));
        }
        Ok(k as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub blowup_flag: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ensemble {
    pub t: f64,
    pub states: Vec<State>,
    pub seed: u64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn check_noise(xi: (f64, f64)) -> Result<()> {
    if xi.0.is_finite() && xi.1.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("non-finite noise draw {xi:?}")))
    }
}

/// `s + dt f / (1 + dt |f|) + (eps_x sqrt(dt) xi1, eps_y sqrt(dt) xi2)`
pub fn step_tamed(p: &ModelParams, s: State, dt: f64, xi: (f64, f64)) -> Result<State> {
    check_noise(xi)?;
    let d = drift_fields(p, s)?;
    let norm = d.fx.hypot(d.fy);
    let tame = dt / (1.0 + dt * norm);
    let sq = dt.sqrt();
    Ok(State::new(
        s.x + tame * d.fx + p.eps_x * sq * xi.0,
        s.y + tame * d.fy + p.eps_y * sq * xi.1,
    ))
}

/// Plain Euler-Maruyama; a drift overflow yields a non-finite state.
pub fn step_euler(p: &ModelParams, s: State, dt: f64, xi: (f64, f64)) -> Result<State> {
    check_noise(xi)?;
    let sq = dt.sqrt();
    match drift_fields(p, s) {
        Ok(d) => Ok(State::new(
            s.x + dt * d.fx + p.eps_x * sq * xi.0,
            s.y + dt * d.fy + p.eps_y * sq * xi.1,
        )),
        Err(Error::Overflow { .. }) => Ok(State::new(f64::NAN, f64::NAN)),
        Err(e) => Err(e),
    }
}

fn step(p: &ModelParams, scheme: Scheme, s: State, dt: f64, xi: (f64, f64)) -> Result<State> {
    match scheme {
        Scheme::TamedEuler => step_tamed(p, s, dt, xi),
        Scheme::Euler => step_euler(p, s, dt, xi),
    }
}

/// One path on noise stream `path_id`.
pub fn simulate_path_id(p: &ModelParams, cfg: &IntegratorConfig, s0: State, path_id: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let mut noise = NoiseStream::new(cfg.seed, path_id);
    let cap = (cfg.steps / cfg.thin + 2) as usize;
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    times.push(0.0);
    states.push(s0);
    let mut s = s0;
    for k in 1..=cfg.steps {
        s = step(p, cfg.scheme, s, cfg.dt, noise.next_pair())?;
        if !s.is_finite() {
            return Ok(Trajectory { times, states, blowup_flag: true });
        }
        if k % cfg.thin == 0 || k == cfg.steps {
            times.push(k as f64 * cfg.dt);
            states.push(s);
        }
    }
    Ok(Trajectory { times, states, blowup_flag: false })
}

pub fn simulate_path(p: &ModelParams, cfg: &IntegratorConfig, s0: State) -> Result<Trajectory> {
    simulate_path_id(p, cfg, s0, 0)
}

/// States of one path at the given (sorted) step indices.
fn path_checkpoints(p: &ModelParams, cfg: &IntegratorConfig, s0: State, path: u64, at: &[u64]) -> Result<Vec<State>> {
    let mut noise = NoiseStream::new(cfg.seed, path);
    let mut out = Vec::with_capacity(at.len());
    let mut s = s0;
    let mut k = 0u64;
    for &target in at {
        while k < target {
            s = step(p, cfg.scheme, s, cfg.dt, noise.next_pair())?;
            k += 1;
            if !s.is_finite() {
                return Err(Error::BlowUpDetected { last_time: (k - 1) as f64 * cfg.dt });
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// `N` independent paths from `s0`, recorded at `checkpoints`; path `j` uses noise stream `j`.
pub fn simulate_ensemble(
    p: &ModelParams,
    cfg: &IntegratorConfig,
    s0: State,
    n: usize,
    checkpoints: &[f64],
) -> Result<Vec<Ensemble>> {
    simulate_ensemble_from(p, cfg, &vec![s0; n], checkpoints)
}

/// Like [`simulate_ensemble`] with one initial state per path.
pub fn simulate_ensemble_from(
    p: &ModelParams,
    cfg: &IntegratorConfig,
    inits: &[State],
    checkpoints: &[f64],
) -> Result<Vec<Ensemble>> {
    cfg.validate()?;
    if inits.is_empty() {
        return Err(Error::InvalidParams("ensemble size must be at least 1".into()));
    }
    let steps = checkpoints.iter().map(|&t| cfg.step_of(t)).collect::<Result<Vec<_>>>()?;
    if steps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("checkpoints must be non-decreasing".into()));
    }
    let per_path = inits
        .par_iter()
        .enumerate()
        .map(|(j, &s0)| path_checkpoints(p, cfg, s0, j as u64, &steps))
        .collect::<Result<Vec<_>>>()?;
    Ok(steps
        .iter()
        .enumerate()
        .map(|(c, &k)| Ensemble {
            t: k as f64 * cfg.dt,
            states: per_path.iter().map(|path| path[c]).collect(),
            seed: cfg.seed,
        })
        .collect())
}
