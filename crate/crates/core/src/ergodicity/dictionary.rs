//! Test functions with weighted sup-norm `sup |phi| / (1 + V) <= 1`, used for a
//! dual lower bound on the `V`-weighted Wasserstein distance.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::GlobalLyapunov;
use crate::model::State;
use crate::sde::rng::{stream_rng, unit_open};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `clamp(x / scale, -1, 1)`
    RampX { scale: f64 },
    /// `clamp(y / scale, -1, 1)`
    RampY { scale: f64 },
    /// `exp(-|s|^2 / r^2)`
    Bump { radius: f64 },
    /// `x / (1 + V)`
    NormalizedX,
    /// `y / (1 + V)`
    NormalizedY,
}

impl TestFunction {
    /// `v` is the value of `V` at `s`.
    pub fn eval(&self, s: State, v: f64) -> f64 {
        match *self {
            TestFunction::RampX { scale } => (s.x / scale).clamp(-1.0, 1.0),
            TestFunction::RampY { scale } => (s.y / scale).clamp(-1.0, 1.0),
            TestFunction::Bump { radius } => (-(s.x * s.x + s.y * s.y) / (radius * radius)).exp(),
            TestFunction::NormalizedX => s.x / (1.0 + v),
            TestFunction::NormalizedY => s.y / (1.0 + v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certification {
    pub probes: usize,
    pub box_radius: f64,
    /// Largest `|phi| / (1 + V)` over the probes.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DictEntry {
    pub function: TestFunction,
    pub certification: Certification,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestFunctionDictionary {
    pub entries: Vec<DictEntry>,
    #[serde(skip)]
    v: GlobalLyapunov,
}

pub const RAMP_SCALES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const BUMP_RADII: [f64; 8] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

pub fn default_functions() -> Vec<TestFunction> {
    let mut out = vec![];
    for &scale in &RAMP_SCALES {
        out.push(TestFunction::RampX { scale });
        out.push(TestFunction::RampY { scale });
    }
    out.extend(BUMP_RADII.iter().map(|&radius| TestFunction::Bump { radius }));
    out.push(TestFunction::NormalizedX);
    out.push(TestFunction::NormalizedY);
    out
}

impl TestFunctionDictionary {
    /// Certifies each function on `probes` points of the box `[-R, R]^2`, mixed
    /// uniformly and log-radially; fails if any ratio exceeds 1.
    pub fn certify(v: GlobalLyapunov, functions: &[TestFunction], box_radius: f64, probes: usize, seed: u64) -> Result<Self> {
        let points: Vec<State> = (0..probes)
            .map(|i| {
                let mut rng = stream_rng(seed, 0xD1C7);
                rng.set_word_pos(i as u128 * 8);
                let (a, b, c) = (unit_open(rng.next_u64()), unit_open(rng.next_u64()), unit_open(rng.next_u64()));
                if c < 0.5 {
                    State::new(box_radius * (2.0 * a - 1.0), box_radius * (2.0 * b - 1.0))
                } else {
                    let r = 1e-6 * (box_radius / 1e-6).powf(a);
                    let th = 2.0 * std::f64::consts::PI * b;
                    State::new(r * th.cos(), r * th.sin())
                }
            })
            .collect();
        let vals: Vec<f64> = points.par_iter().map(|s| v.eval(*s).value).collect();
        let mut entries = vec![];
        for &f in functions {
            let max_ratio = points
                .iter()
                .zip(&vals)
                .map(|(s, &vv)| f.eval(*s, vv).abs() / (1.0 + vv))
                .fold(0.0, f64::max);
            if !(max_ratio <= 1.0) {
                return Err(Error::InvalidParams(format!(
                    "test function {f:?} exceeds the weighted norm bound: ratio {max_ratio}"
                )));
            }
            entries.push(DictEntry {
                function: f,
                certification: Certification { probes, box_radius, max_ratio },
            });
        }
        Ok(Self { entries, v })
    }

    pub fn v(&self) -> &GlobalLyapunov {
        &self.v
    }

    /// `mean phi` for every entry.
    pub fn means(&self, cloud: &[State]) -> Vec<f64> {
        let vals: Vec<f64> = cloud.par_iter().map(|s| self.v.eval(*s).value).collect();
        self.entries
            .iter()
            .map(|e| cloud.iter().zip(&vals).map(|(s, &v)| e.function.eval(*s, v)).sum::<f64>() / cloud.len() as f64)
            .collect()
    }
}

/// `max_phi |mean_A phi - mean_B phi|`, a lower bound on `W_V(A, B)`.
pub fn wv_lower_bound(a: &[State], b: &[State], dict: &TestFunctionDictionary) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("empty ensemble".into()));
    }
    let (ma, mb) = (dict.means(a), dict.means(b));
    Ok(ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
