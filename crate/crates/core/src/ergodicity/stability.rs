use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::sde::{simulate_ensemble, Ensemble, IntegratorConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    #[serde(rename = "M")]
    pub radius: f64,
    pub delta: f64,
    pub times: Vec<f64>,
    /// Fraction of paths with `|state| > M` at each checkpoint.
    pub empirical_tail: Vec<f64>,
    pub n: usize,
}

impl StabilityReport {
    pub fn max_tail(&self) -> f64 {
        self.empirical_tail.iter().copied().fold(0.0, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.max_tail() <= self.delta
    }
}

pub fn tail_fraction(e: &Ensemble, radius: f64) -> f64 {
    e.states.iter().filter(|s| s.norm() > radius).count() as f64 / e.states.len() as f64
}

/// Empirical `level`-quantile of `|state|`.
pub fn radius_quantile(e: &Ensemble, level: f64) -> Result<f64> {
    if e.states.is_empty() || !(0.0..=1.0).contains(&level) {
        return Err(Error::InvalidParams(format!("quantile {level} of {} states", e.states.len())));
    }
    let mut r: Vec<f64> = e.states.iter().map(State::norm).collect();
    r.sort_by(f64::total_cmp);
    let idx = ((level * r.len() as f64).ceil() as usize).clamp(1, r.len()) - 1;
    Ok(r[idx])
}

/// Fraction of `N` paths from `s0` outside radius `M` at each checkpoint.
pub fn stability_check(
    p: &ModelParams,
    cfg: &IntegratorConfig,
    s0: State,
    n: usize,
    radius: f64,
    delta: f64,
    checkpoints: &[f64],
) -> Result<StabilityReport> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidParams(format!("radius must be non-negative, got {radius}")));
    }
    let ens = simulate_ensemble(p, cfg, s0, n, checkpoints)?;
    Ok(from_ensembles(&ens, radius, delta))
}

pub fn from_ensembles(ens: &[Ensemble], radius: f64, delta: f64) -> StabilityReport {
    StabilityReport {
        radius,
        delta,
        times: ens.iter().map(|e| e.t).collect(),
        empirical_tail: ens.iter().map(|e| tail_fraction(e, radius)).collect(),
        n: ens.first().map_or(0, Ensemble::len),
    }
}
