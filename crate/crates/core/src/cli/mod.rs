//! Command-line front end: every command is a pure function of a resolved
//! [`ExperimentConfig`], so a manifest is enough to repeat a run exactly.

pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use config::{preset, ExperimentConfig, OutputFormat, PRESETS};

use crate::ergodicity::{
    fit_exponential, mixing::fit_series, mixing_series, radius_quantile, stability::from_ensembles, Coupling,
    MixingConfig, MixingReport,
};
use crate::error::{Error, Result};
use crate::lyapunov::{verify_drift_condition, RegionSampler};
use crate::model::{blowup_time, DriftVariant};
use crate::sde::io::{self, fmt_f64, Record};
use crate::sde::{ode_reference, simulate_ensemble, simulate_path_id};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DERIVATION: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_FIT_UNAVAILABLE: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "stab-lab", version, about = "Noise-induced stabilization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config with `model`, `integrator`, `experiment` and `constants` blocks.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Named configuration: config-A or fig1-m{2n9,9n2,5n5}-{plus,minus}.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Seed for sample paths and region samples; the first ensemble in `mixing`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "STAB_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Output directory; a manifest is written next to the outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `KEY=VALUE`: a ledger constant (`c1=0.1`) or a dotted config path (`integrator.dt=1e-4`).
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Integrate the noiseless Hamiltonian flow instead of the perturbed system.
    #[arg(long, global = true)]
    pub pure_hamiltonian: bool,
    /// Exponent of x in the Hamiltonian monomial.
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Exponent of y in the Hamiltonian monomial.
    #[arg(long, global = true)]
    pub n: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the constant ledger and its invariant checks.
    DeriveConstants,
    /// Check every drift inequality on its sampled region.
    VerifyLyapunov {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Write sample paths (or the deterministic flow with --pure-hamiltonian).
    Simulate {
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Distance between two ensembles over time and its exponential fit.
    Mixing {
        /// Fit a CSV with columns `t,d` instead of simulating.
        #[arg(long, value_name = "CSV")]
        synthetic: Option<PathBuf>,
        #[arg(long, value_enum)]
        coupling: Option<CouplingArg>,
    },
    /// Fraction of paths outside a radius at each checkpoint.
    Stability,
    /// Closed-form blow-up times over a grid of initial conditions.
    Blowup,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CouplingArg {
    Independent,
    Synchronous,
}

impl From<CouplingArg> for Coupling {
    fn from(c: CouplingArg) -> Self {
        match c {
            CouplingArg::Independent => Coupling::Independent,
            CouplingArg::Synchronous => Coupling::Synchronous,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) | Error::Input(_) | Error::WrongRegime(_) | Error::Unsupported(_) => EXIT_VALIDATION,
        Error::DerivationFailure(_) | Error::Assembly(_) => EXIT_DERIVATION,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        Error::FitUnavailable { .. } => EXIT_FIT_UNAVAILABLE,
        _ => EXIT_OTHER,
    }
}

impl Cli {
    /// Preset or config file, then dedicated flags, then `--override` in order.
    pub fn resolve_config(&self) -> Result<ExperimentConfig> {
        let c = &self.common;
        let mut cfg = match (&c.config, &c.preset) {
            (Some(path), _) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(seed) = c.seed {
            cfg.integrator.seed = seed;
        }
        if let Some(m) = c.m {
            cfg.model.m = m;
        }
        if let Some(n) = c.n {
            cfg.model.n = n;
        }
        if c.pure_hamiltonian {
            cfg.model.variant = DriftVariant::PureHamiltonian;
        }
        match &self.command {
            Command::VerifyLyapunov { samples: Some(s) } => cfg.experiment.verify.samples = *s,
            Command::Simulate { paths, steps } => {
                if let Some(p) = paths {
                    cfg.experiment.simulate.paths = *p;
                }
                if let Some(s) = steps {
                    cfg.integrator.steps = *s;
                }
            }
            Command::Mixing { coupling: Some(k), .. } => cfg.experiment.mixing.coupling = (*k).into(),
            _ => {}
        }
        for o in &c.overrides {
            cfg.apply_override(o)?;
        }
        Ok(cfg)
    }

    fn command_name(&self) -> &'static str {
        match self.command {
            Command::DeriveConstants => "derive-constants",
            Command::VerifyLyapunov { .. } => "verify-lyapunov",
            Command::Simulate { .. } => "simulate",
            Command::Mixing { .. } => "mixing",
            Command::Stability => "stability",
            Command::Blowup => "blowup",
        }
    }
}

/// Runs a parsed command, printing to stdout/stderr; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    if let Some(t) = cli.common.threads {
        // fails only if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::FitUnavailable { times, values, .. } = &e {
                eprintln!("series: {}", json!({ "times": times, "values": values }));
            }
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = cli.resolve_config()?;
    let out = Output { dir: cli.common.out.clone(), command: cli.command_name(), cfg: &cfg, files: vec![] };
    match &cli.command {
        Command::DeriveConstants => derive(&cfg),
        Command::VerifyLyapunov { .. } => verify(&cfg, out),
        Command::Simulate { .. } => simulate(&cfg, out),
        Command::Mixing { synthetic: Some(path), .. } => synthetic_fit(path),
        Command::Mixing { synthetic: None, .. } => mixing(&cfg, out),
        Command::Stability => stability(&cfg, out),
        Command::Blowup => blowup(&cfg, out),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    params: &'a ExperimentConfig,
    params_hash: String,
    seed: u64,
    outputs: &'a [String],
    versions: serde_json::Value,
}

/// Collects output files for one command and finishes with a manifest.
struct Output<'a> {
    dir: Option<PathBuf>,
    command: &'static str,
    cfg: &'a ExperimentConfig,
    files: Vec<String>,
}

impl Output<'_> {
    fn dir_or_default(&mut self) -> &Path {
        self.dir.get_or_insert_with(|| PathBuf::from("stab-lab-out"))
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        io::write_atomic(&dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(self) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let manifest = Manifest {
            command: self.command,
            params: self.cfg,
            params_hash: io::hex(&io::params_hash(self.cfg)?),
            seed: self.cfg.integrator.seed,
            outputs: &self.files,
            versions: json!({
                "stab-lab": env!("CARGO_PKG_VERSION"),
                "binary_format": io::FORMAT_VERSION,
            }),
        };
        io::write_atomic(&dir.join("manifest.json"), &pretty(&manifest)?)?;
        Ok(())
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    print!("{}", String::from_utf8(pretty(v)?).expect("JSON is UTF-8"));
    Ok(())
}

fn derive(cfg: &ExperimentConfig) -> Result<i32> {
    let p = cfg.params()?;
    let k = cfg.ledger(&p)?;
    let checks = k.check_invariants(&p);
    let all_hold = checks.iter().all(|c| c.holds);
    print_json(&json!({
        "params": p.summary(),
        "constants": k,
        "invariants": checks,
        "all_hold": all_hold,
    }))?;
    Ok(if all_hold { EXIT_OK } else { EXIT_DERIVATION })
}

fn verify(cfg: &ExperimentConfig, mut out: Output) -> Result<i32> {
    let p = cfg.params()?;
    let k = cfg.ledger(&p)?;
    let block = &cfg.experiment.verify;
    if block.samples == 0 {
        return Err(Error::InvalidParams("samples must be at least 1".into()));
    }
    let reports = block
        .functions
        .iter()
        .map(|&f| verify_drift_condition(&p, &k, f, &RegionSampler::new(f.region(), block.samples, cfg.integrator.seed)))
        .collect::<Result<Vec<_>>>()?;
    let all_pass = reports.iter().all(|r| r.pass);
    let doc = json!({
        "params": p.summary(),
        "constants": k,
        "samples": block.samples,
        "seed": cfg.integrator.seed,
        "reports": reports,
        "all_pass": all_pass,
    });
    print_json(&doc)?;
    out.write("verify.json", &pretty(&doc)?)?;
    out.finish()?;
    Ok(if all_pass { EXIT_OK } else { EXIT_VERIFICATION })
}

fn simulate(cfg: &ExperimentConfig, mut out: Output) -> Result<i32> {
    let p = cfg.params()?;
    let integ = &cfg.integrator;
    integ.validate()?;
    let block = &cfg.experiment.simulate;
    if block.paths == 0 {
        return Err(Error::InvalidParams("paths must be at least 1".into()));
    }
    out.dir_or_default();
    let trajectories = if p.variant == DriftVariant::PureHamiltonian {
        // The Hamiltonian flow is noiseless; one deterministic path.
        match ode_reference(&p, block.s0, integ.horizon(), true) {
            Ok(t) => vec![t],
            Err(Error::BlowUpDetected { last_time }) => {
                let closed_form = if p.m != p.n { blowup_time(&p, block.s0)? } else { None };
                print_json(&json!({
                    "blowup_detected": true,
                    "last_time": last_time,
                    "closed_form_t_star": closed_form,
                }))?;
                eprintln!("error: flow blows up near t = {last_time}");
                out.finish()?;
                return Ok(EXIT_OTHER);
            }
            Err(e) => return Err(e),
        }
    } else {
        (0..block.paths)
            .into_par_iter()
            .map(|j| simulate_path_id(&p, integ, block.s0, j))
            .collect::<Result<Vec<_>>>()?
    };
    let records: Vec<Record> = trajectories
        .iter()
        .enumerate()
        .flat_map(|(j, t)| io::trajectory_records(j as u64, t))
        .collect();
    if matches!(block.format, OutputFormat::Csv | OutputFormat::Both) {
        let mut buf = vec![];
        io::write_csv(&mut buf, &records)?;
        out.write("trajectory.csv", &buf)?;
    }
    if matches!(block.format, OutputFormat::Binary | OutputFormat::Both) {
        let bytes = io::encode_binary(io::params_hash(cfg)?, integ.seed, &records);
        out.write("trajectory.bin", &bytes)?;
    }
    let blowups = trajectories.iter().filter(|t| t.blowup_flag).count();
    print_json(&json!({
        "paths": trajectories.len(),
        "records": records.len(),
        "blowup_paths": blowups,
        "all_finite": records.iter().all(|r| r.x.is_finite() && r.y.is_finite()),
        "outputs": out.files,
    }))?;
    out.finish()?;
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
struct SeriesRow {
    t: f64,
    #[serde(alias = "w1")]
    d: f64,
}

fn synthetic_fit(path: &Path) -> Result<i32> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<SeriesRow>, _>>()?;
    let (t, d): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.t, r.d)).unzip();
    let fit = fit_exponential(&t, &d)?;
    print_json(&json!({
        "fitted_C": fit.big_c,
        "fitted_c": fit.c,
        "fit_r2": fit.r2,
        "fit_points": fit.points,
    }))?;
    Ok(EXIT_OK)
}

fn mixing(cfg: &ExperimentConfig, mut out: Output) -> Result<i32> {
    let p = cfg.params()?;
    let k = cfg.ledger(&p)?;
    let b = &cfg.experiment.mixing;
    let mc = MixingConfig {
        s0_a: b.s0_a,
        s0_b: b.s0_b,
        n: b.n,
        checkpoints: b.checkpoints.clone(),
        seed_a: cfg.integrator.seed,
        seed_b: b.seed_b,
        coupling: b.coupling,
        floor_factor: b.floor_factor,
        certification_probes: b.certification_probes,
    };
    let series = mixing_series(&p, &k, &cfg.integrator, &mc)?;
    let mut csv = String::from("t,w1,wv_lb\n");
    for ((t, w), lb) in series.times.iter().zip(&series.w1).zip(&series.wv_lb) {
        csv.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(*w), fmt_f64(*lb)));
    }
    out.write("series.csv", csv.as_bytes())?;
    let fit = match fit_series(&series, mc.floor_factor) {
        Ok(f) => f,
        Err(e) => {
            out.finish()?;
            return Err(e);
        }
    };
    let report = MixingReport {
        times: series.times,
        w1: series.w1,
        wv_lb: series.wv_lb,
        fitted_big_c: fit.big_c,
        fitted_c: fit.c,
        fit_r2: fit.r2,
        fit_points: fit.points,
        noise_floor: series.noise_floor,
        seed_a: mc.seed_a,
        seed_b: mc.resolved_seed_b(),
        coupling: mc.coupling,
        n: mc.n,
    };
    print_json(&report)?;
    out.write("mixing.json", &pretty(&report)?)?;
    out.finish()?;
    Ok(EXIT_OK)
}

fn stability(cfg: &ExperimentConfig, mut out: Output) -> Result<i32> {
    let p = cfg.params()?;
    let b = &cfg.experiment.stability;
    if b.n == 0 || b.checkpoints.is_empty() {
        return Err(Error::InvalidParams("stability needs n >= 1 and at least one checkpoint".into()));
    }
    let mut times = b.checkpoints.clone();
    if b.radius.is_none() {
        times.push(b.calibration_time);
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut integ = cfg.integrator.clone();
    let last = *times.last().expect("non-empty");
    integ.steps = integ.steps.max((last / integ.dt).round() as u64);
    let ens = simulate_ensemble(&p, &integ, b.s0, b.n, &times)?;
    let radius = match b.radius {
        Some(r) => r,
        None => {
            let idx = times.iter().position(|&t| t == b.calibration_time).expect("calibration time included");
            radius_quantile(&ens[idx], b.level)?
        }
    };
    let wanted: Vec<_> = times
        .iter()
        .zip(ens)
        .filter(|(t, _)| b.checkpoints.contains(t))
        .map(|(_, e)| e)
        .collect();
    let report = from_ensembles(&wanted, radius, b.delta);
    let holds = report.holds();
    let doc = json!({ "report": report, "max_tail": report.max_tail(), "holds": holds });
    print_json(&doc)?;
    out.write("stability.json", &pretty(&doc)?)?;
    out.finish()?;
    Ok(if holds { EXIT_OK } else { EXIT_VERIFICATION })
}

fn blowup(cfg: &ExperimentConfig, mut out: Output) -> Result<i32> {
    let p = cfg.params()?;
    let mut csv = String::from("x,y,t_star\n");
    for s in cfg.experiment.blowup.points()? {
        let t = blowup_time(&p, s)?;
        let cell = t.map(fmt_f64).unwrap_or_default();
        csv.push_str(&format!("{},{},{}\n", fmt_f64(s.x), fmt_f64(s.y), cell));
    }
    if out.dir.is_some() {
        out.write("blowup.csv", csv.as_bytes())?;
        out.finish()?;
    } else {
        print!("{csv}");
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("stab-lab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_then_overrides() {
        let cli = parse(&["simulate", "--preset", "config-A", "--seed", "9", "--m", "3", "--steps", "5", "--override", "integrator.seed=11"]);
        let cfg = cli.resolve_config().unwrap();
        assert_eq!(cfg.integrator.seed, 11);
        assert_eq!(cfg.integrator.steps, 5);
        assert_eq!(cfg.model.m, 3);
    }

    #[test]
    fn config_and_preset_conflict() {
        let r = Cli::try_parse_from(["stab-lab", "blowup", "--preset", "config-A", "--config", "x.json"]);
        assert!(r.is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidParams(String::new())), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::WrongRegime(String::new())), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::DerivationFailure(String::new())), EXIT_DERIVATION);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_IO);
        assert_eq!(
            exit_code(&Error::FitUnavailable { reason: String::new(), times: vec![], values: vec![] }),
            EXIT_FIT_UNAVAILABLE
        );
        assert_eq!(exit_code(&Error::BlowUp { t_star: 1.0 }), EXIT_OTHER);
    }
}
