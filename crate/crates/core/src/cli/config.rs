use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ergodicity::Coupling;
use crate::error::{Error, Result};
use crate::lyapunov::{derive_constants, DriftFunction, LyapunovConstants};
use crate::model::{DriftVariant, ModelParams, Profile, State};
use crate::sde::{IntegratorConfig, Scheme};

/// A complete, self-describing run: model, integrator and per-command settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub experiment: ExperimentBlock,
    /// Ledger entries replaced after derivation.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelBlock::default(),
            integrator: default_integrator(),
            experiment: ExperimentBlock::default(),
            constants: BTreeMap::new(),
        }
    }
}

fn default_integrator() -> IntegratorConfig {
    IntegratorConfig::new(Scheme::TamedEuler, 1e-3, 1000, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub m: u32,
    pub n: u32,
    pub q: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    /// `linear`, `neg-linear` or `sine-perturbed`.
    pub h: String,
    /// Declared lower bound on `|h'|`; must not exceed the profile's own bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    pub variant: DriftVariant,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            m: 2,
            n: 3,
            q: 2.0,
            eps_x: 1.0,
            eps_y: 1.0,
            h: "linear".into(),
            a: None,
            variant: DriftVariant::Perturbed,
        }
    }
}

impl ModelBlock {
    pub fn params(&self) -> Result<ModelParams> {
        let base = Profile::from_name(&self.h)?;
        let profile = match self.a {
            None => base,
            Some(a) => {
                if !(a > 0.0 && a <= base.a()) {
                    return Err(Error::InvalidParams(format!(
                        "declared a = {a} must lie in (0, {}] for h = {}",
                        base.a(),
                        self.h
                    )));
                }
                let (hb, hp) = (base.clone(), base.clone());
                Profile::custom(
                    self.h.clone(),
                    Some(Arc::new(move |t| hb.h(t).expect("named profiles have h"))),
                    Arc::new(move |t| hp.h_prime(t)),
                    a,
                )
            }
        };
        Ok(ModelParams::new(self.m, self.n, self.q, self.eps_x, self.eps_y, profile)?.with_variant(self.variant))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentBlock {
    pub simulate: SimulateBlock,
    pub verify: VerifyBlock,
    pub mixing: MixingBlock,
    pub stability: StabilityBlock,
    pub blowup: BlowupBlock,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Binary,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub s0: State,
    pub paths: u64,
    pub format: OutputFormat,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self { s0: State::new(1.0, 1.0), paths: 1, format: OutputFormat::Csv }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    pub samples: usize,
    pub functions: Vec<DriftFunction>,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self { samples: 100_000, functions: DriftFunction::ALL.to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixingBlock {
    pub s0_a: State,
    pub s0_b: State,
    pub n: usize,
    pub checkpoints: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_b: Option<u64>,
    pub coupling: Coupling,
    pub floor_factor: f64,
    pub certification_probes: usize,
}

impl Default for MixingBlock {
    fn default() -> Self {
        Self {
            s0_a: State::new(5.0, 5.0),
            s0_b: State::new(-5.0, -5.0),
            n: 4096,
            checkpoints: (1..=16).map(|i| 0.5 * i as f64).collect(),
            seed_b: None,
            coupling: Coupling::Independent,
            floor_factor: 10.0,
            certification_probes: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityBlock {
    pub s0: State,
    pub n: usize,
    pub checkpoints: Vec<f64>,
    /// Fixed radius; when absent it is calibrated as a quantile at `calibration_time`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub calibration_time: f64,
    pub level: f64,
    pub delta: f64,
}

impl Default for StabilityBlock {
    fn default() -> Self {
        Self {
            s0: State::ORIGIN,
            n: 10_000,
            checkpoints: vec![6.0, 8.0, 10.0],
            radius: None,
            calibration_time: 5.0,
            level: 0.995,
            delta: 0.01,
        }
    }
}

/// Rectangular grid of initial conditions, `count` points per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupBlock {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub count: usize,
}

impl Default for BlowupBlock {
    fn default() -> Self {
        Self { x_range: [-2.0, 2.0], y_range: [-2.0, 2.0], count: 9 }
    }
}

impl BlowupBlock {
    pub fn points(&self) -> Result<Vec<State>> {
        if self.count == 0 || self.x_range.iter().chain(&self.y_range).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("blow-up grid needs finite ranges and count >= 1".into()));
        }
        let axis = |r: [f64; 2]| -> Vec<f64> {
            if self.count == 1 {
                return vec![r[0]];
            }
            (0..self.count)
                .map(|i| r[0] + (r[1] - r[0]) * i as f64 / (self.count - 1) as f64)
                .collect()
        };
        let (xs, ys) = (axis(self.x_range), axis(self.y_range));
        Ok(xs.iter().flat_map(|&x| ys.iter().map(move |&y| State::new(x, y))).collect())
    }
}

pub const PRESETS: [&str; 7] = [
    "config-A",
    "fig1-m2n9-plus",
    "fig1-m2n9-minus",
    "fig1-m9n2-plus",
    "fig1-m9n2-minus",
    "fig1-m5n5-plus",
    "fig1-m5n5-minus",
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    if name == "config-A" {
        let mut c = ExperimentConfig::default();
        c.integrator = IntegratorConfig::new(Scheme::TamedEuler, 1e-3, 8000, 0);
        return Ok(c);
    }
    let (m, n, h) = match name {
        "fig1-m2n9-plus" => (2, 9, "linear"),
        "fig1-m2n9-minus" => (2, 9, "neg-linear"),
        "fig1-m9n2-plus" => (9, 2, "linear"),
        "fig1-m9n2-minus" => (9, 2, "neg-linear"),
        "fig1-m5n5-plus" => (5, 5, "linear"),
        "fig1-m5n5-minus" => (5, 5, "neg-linear"),
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown preset '{other}' (available: {})",
                PRESETS.join(", ")
            )))
        }
    };
    let mut c = ExperimentConfig::default();
    c.model = ModelBlock { m, n, q: 2.0, eps_x: 10.0, eps_y: 10.0, h: h.into(), ..ModelBlock::default() };
    c.integrator = IntegratorConfig::new(Scheme::TamedEuler, 1e-4, 100_000, 0);
    c.integrator.thin = 100;
    c.experiment.simulate.s0 = State::ORIGIN;
    c.experiment.stability.checkpoints = vec![6.0, 8.0, 10.0];
    Ok(c)
}

impl ExperimentConfig {
    /// Parses a config document, or the `params` block of a run manifest.
    pub fn from_json(text: &str) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::InvalidParams(format!("config: {e}"));
        let mut v: Value = serde_json::from_str(text).map_err(bad)?;
        if let Some(obj) = v.as_object_mut() {
            if obj.contains_key("command") && obj.contains_key("params") {
                v = obj.remove("params").expect("checked");
            }
        }
        serde_json::from_value(v).map_err(bad)
    }

    /// Applies `KEY=VALUE`. Ledger names (`c1`, `k2`, ...) go to the constants
    /// block; anything else is a dotted path into the config, e.g. `integrator.dt=1e-4`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("override '{spec}' is not KEY=VALUE")))?;
        let key = key.trim();
        let value: Value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
        let path: Vec<&str> = if LyapunovConstants::is_constant_name(key) {
            vec!["constants", key]
        } else {
            key.split('.').collect()
        };
        if path.iter().any(|p| p.is_empty()) {
            return Err(Error::InvalidParams(format!("override key '{key}' is malformed")));
        }
        let mut root = serde_json::to_value(&*self)?;
        let mut node = &mut root;
        for (i, part) in path.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::InvalidParams(format!("override '{key}': '{part}' is not inside an object")))?;
            if i + 1 == path.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
        *self = serde_json::from_value(root).map_err(|e| Error::InvalidParams(format!("override '{spec}': {e}")))?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.model.params()
    }

    /// Derived ledger with the `constants` block applied on top.
    pub fn ledger(&self, p: &ModelParams) -> Result<LyapunovConstants> {
        let mut k = derive_constants(p)?;
        for (key, &v) in &self.constants {
            k.set(key, v)?;
        }
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"model": {"m": 2, "bogus": 1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"extra": {}}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"model": {"m": 3, "n": 2}}"#).unwrap();
        assert_eq!((c.model.m, c.model.n, c.model.q), (3, 2, 2.0));
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::default();
        c.apply_override("c1=0.1").unwrap();
        c.apply_override("integrator.dt=1e-4").unwrap();
        c.apply_override("model.h=neg-linear").unwrap();
        c.apply_override("experiment.mixing.coupling=synchronous").unwrap();
        assert_eq!(c.constants["c1"], 0.1);
        assert_eq!(c.integrator.dt, 1e-4);
        assert_eq!(c.model.h, "neg-linear");
        assert_eq!(c.experiment.mixing.coupling, Coupling::Synchronous);
        assert!(c.apply_override("model.nope=1").is_err());
        assert!(c.apply_override("novalue").is_err());
        let p = c.params().unwrap();
        assert_eq!(c.ledger(&p).unwrap().c1, 0.1);
    }

    #[test]
    fn round_trip_and_presets() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
            c.params().unwrap();
        }
        assert!(preset("fig2").is_err());
        let c = preset("fig1-m2n9-plus").unwrap();
        assert_eq!((c.model.m, c.model.n, c.model.eps_x, c.model.q), (2, 9, 10.0, 2.0));
    }

    #[test]
    fn declared_a() {
        let mut b = ModelBlock { h: "sine-perturbed".into(), a: Some(0.25), ..ModelBlock::default() };
        assert_eq!(b.params().unwrap().a(), 0.25);
        b.a = Some(0.75);
        assert!(b.params().is_err());
    }

    #[test]
    fn grid_contains_unit_point() {
        let pts = BlowupBlock::default().points().unwrap();
        assert_eq!(pts.len(), 81);
        assert!(pts.contains(&State::new(1.0, 1.0)));
    }
}
