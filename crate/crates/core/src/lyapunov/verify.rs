use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constants::LyapunovConstants;
use super::functions::{v1, v2, v3, v_blend, BlendTarget, GlobalLyapunov, LyapunovValue};
use super::regions::{region_contains, Region, RegionSampler};
use crate::error::{Error, Result};
use crate::model::{drift_fields, generator_apply, ModelParams, State};

/// Function whose drift inequality is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DriftFunction {
    #[serde(rename = "v1")]
    V1,
    #[serde(rename = "v2")]
    V2,
    #[serde(rename = "v3")]
    V3,
    #[serde(rename = "v12")]
    V12,
    #[serde(rename = "v13")]
    V13,
    #[serde(rename = "V")]
    Global,
}

impl DriftFunction {
    pub const ALL: [DriftFunction; 6] = [Self::V1, Self::V2, Self::V3, Self::V12, Self::V13, Self::Global];

    pub fn name(self) -> &'static str {
        match self {
            Self::V1 => "v1",
            Self::V2 => "v2",
            Self::V3 => "v3",
            Self::V12 => "v12",
            Self::V13 => "v13",
            Self::Global => "V",
        }
    }

    /// The region on which the inequality is claimed.
    pub fn region(self) -> Region {
        match self {
            Self::V1 => Region::R1,
            Self::V2 => Region::R2,
            Self::V3 => Region::R3,
            Self::V12 => Region::R1R2,
            Self::V13 => Region::R1R3,
            Self::Global => Region::Disk,
        }
    }

    /// Whether the right-hand side carries an empirically fitted constant.
    pub fn has_fitted_constant(self) -> bool {
        matches!(self, Self::V12 | Self::V13 | Self::Global)
    }
}

/// `LV <= -a1 V + a2`, plus a note on any sharper terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftConditionSpec {
    pub a1: f64,
    pub a2: f64,
    pub extra: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationReport {
    pub function: DriftFunction,
    pub region: String,
    pub count: usize,
    pub max_violation: f64,
    pub argmax_x: f64,
    pub argmax_y: f64,
    pub pass: bool,
    /// Fitted constant `C` for the `-(1/2) value + C` forms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_constant: Option<f64>,
    /// For `v3` at `q = 2`: largest violation of the `u^2` form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secondary_max_violation: Option<f64>,
    /// For `v1`: smallest `u` seen on the region.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_u: Option<f64>,
}

impl ViolationReport {
    pub fn drift_spec(&self) -> Option<DriftConditionSpec> {
        match self.function {
            DriftFunction::V1 => Some(DriftConditionSpec {
                a1: 0.5,
                a2: f64::NAN,
                extra: "additional -u^q v1 term".into(),
            }),
            DriftFunction::V2 | DriftFunction::V3 => Some(DriftConditionSpec {
                a1: 1.0,
                a2: f64::NAN,
                extra: "additional -(1/2) x^2 u^q (resp. y^2) term".into(),
            }),
            _ => self.empirical_constant.map(|c| DriftConditionSpec {
                a1: 0.5,
                a2: c,
                extra: String::new(),
            }),
        }
    }
}

#[derive(Clone, Copy)]
struct Sample {
    /// LHS - RHS for the fixed forms, LHS + value/2 for the fitted ones.
    excess: f64,
    secondary: f64,
    u: f64,
    s: State,
}

/// Greater excess wins; ties go to the lexicographically smaller point.
fn better(a: Sample, b: Sample) -> Sample {
    use std::cmp::Ordering::*;
    match a.excess.total_cmp(&b.excess) {
        Greater => a,
        Less => b,
        Equal => match (a.s.x, a.s.y).partial_cmp(&(b.s.x, b.s.y)) {
            Some(Greater) => b,
            _ => a,
        },
    }
}

fn evaluate(which: DriftFunction, p: &ModelParams, k: &LyapunovConstants, gv: Option<&GlobalLyapunov>, s: State) -> Result<Sample> {
    let value: LyapunovValue = match which {
        DriftFunction::V1 => v1(s),
        DriftFunction::V2 => v2(k, s),
        DriftFunction::V3 => v3(k, s),
        DriftFunction::V12 => v_blend(BlendTarget::V2, p, k, s),
        DriftFunction::V13 => v_blend(BlendTarget::V3, p, k, s),
        DriftFunction::Global => gv.expect("global function assembled").eval(s),
    };
    let lhs = generator_apply(p, &value, s)?;
    let d = drift_fields(p, s)?;
    let uq = d.u.powf(p.q);
    let (ex2, ey2) = (p.eps_x * p.eps_x, p.eps_y * p.eps_y);
    let (excess, secondary) = match which {
        DriftFunction::V1 => (lhs - (-0.5 * value.value - uq * value.value + ex2 + ey2), f64::NAN),
        DriftFunction::V2 => (lhs - (-value.value - 0.5 * s.x * s.x * uq + ex2), f64::NAN),
        DriftFunction::V3 => (
            lhs - (-value.value - 0.5 * s.y * s.y * uq + ey2),
            lhs - (-value.value - 0.5 * s.y * s.y * d.u * d.u + ey2),
        ),
        _ => (lhs + 0.5 * value.value, f64::NAN),
    };
    if !excess.is_finite() {
        return Err(Error::Overflow { monomial: "generator", x: s.x, y: s.y });
    }
    Ok(Sample { excess, secondary, u: d.u, s })
}

/// Checks the drift inequality of `which` at every sample of `sampler`.
pub fn verify_drift_condition(
    p: &ModelParams,
    k: &LyapunovConstants,
    which: DriftFunction,
    sampler: &RegionSampler,
) -> Result<ViolationReport> {
    if sampler.count == 0 {
        return Err(Error::InvalidParams("sampler must draw at least one point".into()));
    }
    let points = sampler.samples(k, p.m, p.n, p.q)?;
    verify_on_points(p, k, which, sampler.region, &points)
}

/// Same as [`verify_drift_condition`] on a caller-supplied point set.
pub fn verify_on_points(
    p: &ModelParams,
    k: &LyapunovConstants,
    which: DriftFunction,
    region: Region,
    points: &[State],
) -> Result<ViolationReport> {
    if let Some(bad) = points.iter().find(|s| !region_contains(region, k, p.m, p.n, **s)) {
        return Err(Error::SamplerContract { region: region.name().into(), x: bad.x, y: bad.y });
    }
    let gv = match which {
        DriftFunction::Global => Some(GlobalLyapunov::new(p, k)?),
        _ => None,
    };
    let evaluated = points
        .par_iter()
        .map(|s| evaluate(which, p, k, gv.as_ref(), *s))
        .collect::<Result<Vec<_>>>()?;
    let best = evaluated.iter().copied().reduce(better).expect("non-empty");
    let secondary = evaluated.iter().map(|e| e.secondary).fold(f64::NEG_INFINITY, f64::max);
    let min_u = evaluated.iter().map(|e| e.u).fold(f64::INFINITY, f64::min);

    let (max_violation, empirical_constant) = if which.has_fitted_constant() {
        (0.0, Some(best.excess))
    } else {
        (best.excess, None)
    };
    let secondary_max_violation = (which == DriftFunction::V3 && p.q == 2.0).then_some(secondary);
    Ok(ViolationReport {
        function: which,
        region: region.name().to_string(),
        count: points.len(),
        max_violation,
        argmax_x: best.s.x,
        argmax_y: best.s.y,
        pass: max_violation <= 0.0,
        empirical_constant,
        secondary_max_violation,
        min_u: (which == DriftFunction::V1).then_some(min_u),
    })
}
