use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dictionary::{default_functions, wv_lower_bound, TestFunctionDictionary};
use super::fit::{fit_exponential, ExpFit};
use super::wasserstein::empirical_wasserstein1;
use crate::error::{Error, Result};
use crate::lyapunov::{GlobalLyapunov, LyapunovConstants};
use crate::model::{ModelParams, State};
use crate::sde::rng::derive_seed;
use crate::sde::{simulate_ensemble, IntegratorConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Ensembles driven by independent noise.
    #[default]
    Independent,
    /// Both ensembles share the noise of `seed_a`.
    Synchronous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    pub s0_a: State,
    pub s0_b: State,
    pub n: usize,
    pub checkpoints: Vec<f64>,
    pub seed_a: u64,
    /// Defaults to a seed derived from `seed_a` (independent coupling).
    #[serde(default)]
    pub seed_b: Option<u64>,
    #[serde(default)]
    pub coupling: Coupling,
    /// Checkpoints are fitted only where `w1 > floor_factor * noise_floor`.
    #[serde(default = "default_floor_factor")]
    pub floor_factor: f64,
    #[serde(default = "default_probes")]
    pub certification_probes: usize,
}

fn default_floor_factor() -> f64 {
    10.0
}

fn default_probes() -> usize {
    1_000_000
}

impl MixingConfig {
    pub fn new(s0_a: State, s0_b: State, n: usize, checkpoints: Vec<f64>, seed_a: u64) -> Self {
        Self {
            s0_a,
            s0_b,
            n,
            checkpoints,
            seed_a,
            seed_b: None,
            coupling: Coupling::Independent,
            floor_factor: default_floor_factor(),
            certification_probes: default_probes(),
        }
    }

    pub fn resolved_seed_b(&self) -> u64 {
        match self.coupling {
            Coupling::Synchronous => self.seed_a,
            Coupling::Independent => self.seed_b.unwrap_or_else(|| derive_seed(self.seed_a, 1)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingReport {
    pub times: Vec<f64>,
    pub w1: Vec<f64>,
    pub wv_lb: Vec<f64>,
    #[serde(rename = "fitted_C")]
    pub fitted_big_c: f64,
    pub fitted_c: f64,
    pub fit_r2: f64,
    pub fit_points: usize,
    /// Mean `W1` between same-law ensembles at the last checkpoint.
    pub noise_floor: f64,
    pub seed_a: u64,
    pub seed_b: u64,
    pub coupling: Coupling,
    pub n: usize,
}

/// Raw distance series before fitting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingSeries {
    pub times: Vec<f64>,
    pub w1: Vec<f64>,
    pub wv_lb: Vec<f64>,
    pub noise_floor: f64,
}

impl MixingSeries {
    /// Points strictly above `factor * noise_floor`.
    pub fn above_floor(&self, factor: f64) -> (Vec<f64>, Vec<f64>) {
        self.times
            .iter()
            .zip(&self.w1)
            .filter(|(_, &w)| w > factor * self.noise_floor)
            .map(|(&t, &w)| (t, w))
            .unzip()
    }
}

/// Simulates both ensembles and their same-law replicas and measures distances.
pub fn mixing_series(
    p: &ModelParams,
    k: &LyapunovConstants,
    integ: &IntegratorConfig,
    cfg: &MixingConfig,
) -> Result<MixingSeries> {
    if cfg.n == 0 {
        return Err(Error::InvalidParams("ensemble size must be at least 1".into()));
    }
    if cfg.checkpoints.is_empty() || cfg.checkpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams("checkpoints must be non-empty and increasing".into()));
    }
    let last = *cfg.checkpoints.last().expect("non-empty");
    // The horizon is set by the last checkpoint.
    let mut integ = integ.clone();
    integ.steps = ((last / integ.dt).round() as u64).max(1);
    let seed_b = cfg.resolved_seed_b();
    let run = |s0: State, seed: u64, cps: &[f64]| {
        let mut c = integ.clone();
        c.seed = seed;
        simulate_ensemble(p, &c, s0, cfg.n, cps)
    };
    let ens_a = run(cfg.s0_a, cfg.seed_a, &cfg.checkpoints)?;
    let ens_b = run(cfg.s0_b, seed_b, &cfg.checkpoints)?;
    let rep_a = run(cfg.s0_a, derive_seed(cfg.seed_a, 2), &[last])?;
    let rep_b = run(cfg.s0_b, derive_seed(seed_b, 3), &[last])?;

    let v = GlobalLyapunov::new(p, k)?;
    let radius = ens_a
        .iter()
        .chain(&ens_b)
        .flat_map(|e| e.states.iter())
        .map(|s| s.norm())
        .fold(1.0, f64::max);
    let dict = TestFunctionDictionary::certify(v, &default_functions(), radius, cfg.certification_probes, cfg.seed_a)?;

    let w1 = ens_a
        .par_iter()
        .zip(&ens_b)
        .map(|(a, b)| empirical_wasserstein1(&a.states, &b.states))
        .collect::<Result<Vec<_>>>()?;
    let wv_lb = ens_a
        .iter()
        .zip(&ens_b)
        .map(|(a, b)| wv_lower_bound(&a.states, &b.states, &dict))
        .collect::<Result<Vec<_>>>()?;
    let floor_a = empirical_wasserstein1(&ens_a.last().expect("checkpoint").states, &rep_a[0].states)?;
    let floor_b = empirical_wasserstein1(&ens_b.last().expect("checkpoint").states, &rep_b[0].states)?;
    Ok(MixingSeries {
        times: ens_a.iter().map(|e| e.t).collect(),
        w1,
        wv_lb,
        noise_floor: 0.5 * (floor_a + floor_b),
    })
}

/// Fits `W1(t) ~ C exp(-c t)` over the checkpoints above the noise floor.
pub fn fit_series(series: &MixingSeries, floor_factor: f64) -> Result<ExpFit> {
    let (t, w) = series.above_floor(floor_factor);
    fit_exponential(&t, &w).map_err(|e| match e {
        Error::FitUnavailable { reason, .. } => Error::FitUnavailable {
            reason: format!("{reason} above {floor_factor} x noise floor {}", series.noise_floor),
            times: series.times.clone(),
            values: series.w1.clone(),
        },
        other => other,
    })
}

pub fn mixing_experiment(
    p: &ModelParams,
    k: &LyapunovConstants,
    integ: &IntegratorConfig,
    cfg: &MixingConfig,
) -> Result<MixingReport> {
    let series = mixing_series(p, k, integ, cfg)?;
    let fit = fit_series(&series, cfg.floor_factor)?;
    Ok(MixingReport {
        times: series.times,
        w1: series.w1,
        wv_lb: series.wv_lb,
        fitted_big_c: fit.big_c,
        fitted_c: fit.c,
        fit_r2: fit.r2,
        fit_points: fit.points,
        noise_floor: series.noise_floor,
        seed_a: cfg.seed_a,
        seed_b: cfg.resolved_seed_b(),
        coupling: cfg.coupling,
        n: cfg.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::derive_constants;
    use crate::sde::Scheme;

    fn small(coupling: Coupling, a: State, b: State) -> MixingConfig {
        let mut c = MixingConfig::new(a, b, 64, vec![0.1, 0.2, 0.3], 5);
        c.coupling = coupling;
        c.certification_probes = 2000;
        c
    }

    #[test]
    fn equal_starts_and_seeds_are_unavailable() {
        let p = ModelParams::config_a();
        let k = derive_constants(&p).unwrap();
        let integ = IntegratorConfig::new(Scheme::TamedEuler, 0.01, 1, 0);
        let cfg = small(Coupling::Synchronous, State::new(1.0, 1.0), State::new(1.0, 1.0));
        let s = mixing_series(&p, &k, &integ, &cfg).unwrap();
        assert!(s.w1.iter().all(|&w| w == 0.0));
        assert!(matches!(
            mixing_experiment(&p, &k, &integ, &cfg),
            Err(Error::FitUnavailable { .. })
        ));
    }

    #[test]
    fn seed_b_resolution() {
        let mut c = small(Coupling::Independent, State::ORIGIN, State::ORIGIN);
        assert_ne!(c.resolved_seed_b(), c.seed_a);
        c.seed_b = Some(99);
        assert_eq!(c.resolved_seed_b(), 99);
        c.coupling = Coupling::Synchronous;
        assert_eq!(c.resolved_seed_b(), c.seed_a);
    }

    #[test]
    fn distances_shrink_from_separated_starts() {
        let p = ModelParams::config_a();
        let k = derive_constants(&p).unwrap();
        let integ = IntegratorConfig::new(Scheme::TamedEuler, 0.01, 1, 0);
        let cfg = small(Coupling::Independent, State::new(3.0, 3.0), State::new(-3.0, -3.0));
        let s = mixing_series(&p, &k, &integ, &cfg).unwrap();
        assert!(s.w1.iter().all(|w| w.is_finite() && *w >= 0.0));
        assert!(s.wv_lb.iter().all(|w| w.is_finite() && *w >= 0.0));
        assert!(s.noise_floor > 0.0);
    }

    #[test]
    fn rejects_bad_checkpoints() {
        let p = ModelParams::config_a();
        let k = derive_constants(&p).unwrap();
        let integ = IntegratorConfig::new(Scheme::TamedEuler, 0.01, 1, 0);
        let mut cfg = small(Coupling::Independent, State::ORIGIN, State::ORIGIN);
        cfg.checkpoints = vec![0.2, 0.1];
        assert!(mixing_series(&p, &k, &integ, &cfg).is_err());
    }
}
