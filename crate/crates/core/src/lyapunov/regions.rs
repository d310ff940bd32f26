//! Region decomposition of the plane and boundary-biased samplers for each piece.
//!
//! Points are parametrised by one free coordinate and the monomial
//! `P = |x|^(m-1) |y|^(n-1)`; the other coordinate is solved from `P`. Every sample
//! `i` draws from its own counter-addressed block of the ChaCha stream, so the first
//! `N` samples of a larger run are exactly the samples of a run of size `N`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::constants::LyapunovConstants;
use crate::error::{Error, Result};
use crate::model::{ipow, State};
use crate::sde::rng::{stream_rng, unit_open};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RegionLabel {
    pub in_r1: bool,
    pub in_r2: bool,
    pub in_r3: bool,
    pub in_center: bool,
}

fn monomial(m: u32, n: u32, s: State) -> f64 {
    ipow(s.x.abs(), m - 1) * ipow(s.y.abs(), n - 1)
}

pub fn classify_region(k: &LyapunovConstants, m: u32, n: u32, s: State) -> RegionLabel {
    let p = monomial(m, n, s);
    let in_r1 = p >= k.c1;
    let in_r2 = p <= 2.0 * k.c1 && s.x.abs() >= k.c2;
    let in_r3 = p <= 2.0 * k.c1 && s.y.abs() >= k.c3;
    RegionLabel {
        in_r1,
        in_r2,
        in_r3,
        in_center: !(in_r1 || in_r2 || in_r3),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    R1,
    R2,
    R3,
    #[serde(rename = "R1∩R2")]
    R1R2,
    #[serde(rename = "R1∩R3")]
    R1R3,
    /// Disk of radius `10 max(c2, c3)`.
    Disk,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::R1 => "R1",
            Region::R2 => "R2",
            Region::R3 => "R3",
            Region::R1R2 => "R1∩R2",
            Region::R1R3 => "R1∩R3",
            Region::Disk => "disk",
        }
    }

    fn stream_id(self) -> u64 {
        match self {
            Region::R1 => 1,
            Region::R2 => 2,
            Region::R3 => 3,
            Region::R1R2 => 12,
            Region::R1R3 => 13,
            Region::Disk => 100,
        }
    }
}

/// Radius of the sampling box, `10 max(c2, c3)`.
pub fn box_radius(k: &LyapunovConstants) -> f64 {
    10.0 * k.c2.max(k.c3)
}

pub fn region_contains(region: Region, k: &LyapunovConstants, m: u32, n: u32, s: State) -> bool {
    if !s.is_finite() {
        return false;
    }
    let l = classify_region(k, m, n, s);
    match region {
        Region::R1 => l.in_r1,
        Region::R2 => l.in_r2,
        Region::R3 => l.in_r3,
        Region::R1R2 => l.in_r1 && l.in_r2,
        Region::R1R3 => l.in_r1 && l.in_r3,
        Region::Disk => s.norm() <= box_radius(k),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionSampler {
    pub region: Region,
    pub count: usize,
    pub seed: u64,
    /// Fraction of samples placed within `boundary_width` (relative) of a boundary.
    pub boundary_fraction: f64,
    pub boundary_width: f64,
}

/// Words of the ChaCha stream reserved per sample.
const WORDS_PER_SAMPLE: u128 = 32;
/// Smallest `P / (2 c1)` drawn in the regions below the product threshold.
const P_FLOOR: f64 = 1e-16;
/// Fraction of R2/R3 samples placed exactly on the axis.
const AXIS_FRACTION: f64 = 0.02;
/// Bound on the size of `u^q x^2` terms so that evaluations stay finite.
const MAGNITUDE_BUDGET: f64 = 1e250;

struct Draws {
    rng: rand_chacha::ChaCha8Rng,
}

impl Draws {
    fn uniform(&mut self) -> f64 {
        unit_open(self.rng.next_u64())
    }

    fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        lo * (hi / lo).powf(self.uniform())
    }

    fn sign(&mut self) -> f64 {
        if self.rng.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Which coordinate is drawn directly; the other is solved from `P`.
#[derive(Clone, Copy)]
enum Free {
    X,
    Y,
}

impl RegionSampler {
    pub fn new(region: Region, count: usize, seed: u64) -> Self {
        Self {
            region,
            count,
            seed,
            boundary_fraction: 0.2,
            boundary_width: 0.01,
        }
    }

    /// Largest monomial value drawn, keeping `u^q x^2` and `u^q y^2` below `1e250`.
    pub fn monomial_cap(k: &LyapunovConstants, q: f64) -> f64 {
        let r = box_radius(k);
        (MAGNITUDE_BUDGET / (r * r)).powf(1.0 / q) / 10.0
    }

    pub fn samples(&self, k: &LyapunovConstants, m: u32, n: u32, q: f64) -> Result<Vec<State>> {
        (0..self.count).map(|i| self.sample(k, m, n, q, i as u64)).collect()
    }

    /// The `i`-th sample; depends only on `(seed, region, i)`.
    pub fn sample(&self, k: &LyapunovConstants, m: u32, n: u32, q: f64, i: u64) -> Result<State> {
        let mut rng = stream_rng(self.seed, self.region.stream_id());
        rng.set_word_pos(i as u128 * WORDS_PER_SAMPLE);
        let mut d = Draws { rng };
        let s = self.draw(&mut d, k, m, n, q);
        self.repair(s, k, m, n)
    }

    fn draw(&self, d: &mut Draws, k: &LyapunovConstants, m: u32, n: u32, q: f64) -> State {
        let r = box_radius(k);
        let w = 1.0 + self.boundary_width;
        let cap = Self::monomial_cap(k, q).max(4.0 * k.c1);
        let near_boundary = d.uniform() < self.boundary_fraction;
        let edge = d.uniform();
        let (sx, sy) = (d.sign(), d.sign());
        let (free, t, p) = match self.region {
            Region::R1 => {
                let free = if d.uniform() < 0.5 { Free::X } else { Free::Y };
                let (ef, eo) = exponents(free, m, n);
                // smallest free value for which some partner inside the box reaches c1
                let t_lo = (k.c1 / ipow(r, eo)).powf(1.0 / ef as f64);
                let t = d.log_uniform(t_lo, r);
                let p_hi = cap.min(ipow(t, ef) * ipow(r, eo)).max(k.c1);
                let p = if near_boundary {
                    d.log_uniform(k.c1, (k.c1 * w).min(p_hi))
                } else {
                    d.log_uniform(k.c1, p_hi)
                };
                (free, t, p)
            }
            Region::R2 | Region::R3 => {
                let (free, lo) = if self.region == Region::R2 { (Free::X, k.c2) } else { (Free::Y, k.c3) };
                let hi = 2.0 * k.c1;
                let (t, p) = if near_boundary && edge < 0.5 {
                    (d.log_uniform(lo, lo * w), d.log_uniform(hi * P_FLOOR, hi))
                } else if near_boundary {
                    (d.log_uniform(lo, r), d.log_uniform(hi / w, hi))
                } else if d.uniform() < AXIS_FRACTION {
                    (d.log_uniform(lo, r), 0.0)
                } else {
                    (d.log_uniform(lo, r), d.log_uniform(hi * P_FLOOR, hi))
                };
                (free, t, p)
            }
            Region::R1R2 | Region::R1R3 => {
                let (free, lo) = if self.region == Region::R1R2 { (Free::X, k.c2) } else { (Free::Y, k.c3) };
                let (plo, phi) = (k.c1, 2.0 * k.c1);
                // The fitted constants peak at the corners t = lo, P in {c1, 2 c1}.
                let (t, p) = if near_boundary && edge < 0.25 {
                    let p = if d.uniform() < 0.5 { d.log_uniform(plo, plo * w) } else { d.log_uniform(phi / w, phi) };
                    (d.log_uniform(lo, lo * w), p)
                } else if near_boundary && edge < 0.5 {
                    (d.log_uniform(lo, lo * w), d.log_uniform(plo, phi))
                } else if near_boundary && edge < 0.75 {
                    (d.log_uniform(lo, r), d.log_uniform(plo, plo * w))
                } else if near_boundary {
                    (d.log_uniform(lo, r), d.log_uniform(phi / w, phi))
                } else {
                    (d.log_uniform(lo, r), d.log_uniform(plo, phi))
                };
                (free, t, p)
            }
            Region::Disk => {
                let lo = 1e-3;
                if d.uniform() < 0.4 {
                    let rad = d.log_uniform(lo, r);
                    let theta = 2.0 * std::f64::consts::PI * d.uniform();
                    return State::new(rad * theta.cos(), rad * theta.sin());
                }
                // Structured draws concentrate on the transition bands near the axes.
                let free = if d.uniform() < 0.5 { Free::X } else { Free::Y };
                let (ef, eo) = exponents(free, m, n);
                let p = d.log_uniform(k.c1 * 1e-6, (8.0 * k.c1).min(cap));
                let t_lo = lo.max((p / ipow(r, eo)).powf(1.0 / ef as f64));
                let t = d.log_uniform(t_lo, r);
                let s = place(free, t, p, m, n, sx, sy);
                let norm = s.norm();
                return if norm > r {
                    State::new(s.x * r / norm, s.y * r / norm)
                } else {
                    s
                };
            }
        };
        place(free, t, p, m, n, sx, sy)
    }

    /// Rounding in the solved coordinate can leave a boundary sample just outside;
    /// nudge it back by a few ulps-scale factors.
    fn repair(&self, s: State, k: &LyapunovConstants, m: u32, n: u32) -> Result<State> {
        if region_contains(self.region, k, m, n, s) {
            return Ok(s);
        }
        for delta in [1e-15, 1e-14, 1e-13, 1e-12, 1e-11] {
            for f in [1.0 + delta, 1.0 - delta] {
                for cand in [State::new(s.x, s.y * f), State::new(s.x * f, s.y)] {
                    if region_contains(self.region, k, m, n, cand) {
                        return Ok(cand);
                    }
                }
            }
        }
        Err(Error::SamplerContract {
            region: self.region.name().to_string(),
            x: s.x,
            y: s.y,
        })
    }
}

fn exponents(free: Free, m: u32, n: u32) -> (u32, u32) {
    match free {
        Free::X => (m - 1, n - 1),
        Free::Y => (n - 1, m - 1),
    }
}

fn place(free: Free, t: f64, p: f64, m: u32, n: u32, sx: f64, sy: f64) -> State {
    let (ef, eo) = exponents(free, m, n);
    let other = (p / ipow(t, ef)).powf(1.0 / eo as f64);
    match free {
        Free::X => State::new(sx * t, sy * other),
        Free::Y => State::new(sx * other, sy * t),
    }
}
