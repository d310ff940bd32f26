//! Acceptance criteria 1-11. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p stab-lab --test acceptance -- --nocapture --test-threads 1`.
//! Tests hold a shared lock so the runtime budgets are measured one at a time.
//! Verdict lines go straight to stderr, so they show even without `--nocapture`.

use std::io::Write;

use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stab_lab::cli::config::{preset, PRESETS};
use stab_lab::ergodicity::mixing::fit_series;
use stab_lab::ergodicity::stability::from_ensembles;
use stab_lab::ergodicity::*;
use stab_lab::lyapunov::cutoff::{LOWER_KNOT, UPPER_KNOT};
use stab_lab::lyapunov::regions::box_radius;
use stab_lab::lyapunov::*;
use stab_lab::model::*;
use stab_lab::sde::*;
use stab_lab::Error;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line and fails the test on `FAIL`.
fn verdict(id: u32, what: &str, checks: &[(&str, bool)], elapsed: Duration, budget: Duration, detail: String) {
    let in_time = elapsed <= budget;
    let ok = in_time && checks.iter().all(|(_, c)| *c);
    let failed: Vec<&str> = checks.iter().filter(|(_, c)| !*c).map(|(n, _)| *n).collect();
    let _ = writeln!(
        std::io::stderr().lock(),
        "criterion {id:>2} {}: {what} [{:.1}s / {:.0}s budget] {detail}{}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64(),
        if failed.is_empty() && in_time {
            String::new()
        } else {
            format!(" failed: {failed:?}{}", if in_time { "" } else { " (over budget)" })
        }
    );
    assert!(ok, "criterion {id} failed: {failed:?}, in_time = {in_time}");
}

fn params(name: &str) -> ModelParams {
    preset(name).unwrap().params().unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- 1

#[test]
fn c01_closed_forms_match_ode_oracle() {
    const TOL: f64 = 1e-6;
    const BLOWUP_TOL: f64 = 1e-4;
    let _g = serial();
    let start = Instant::now();

    let equal = ModelParams::new(2, 2, 2.0, 1.0, 1.0, Profile::Linear).unwrap();
    let s0 = State::new(0.7, 0.9);
    let ode = ode_reference(&equal, s0, 10.0, true).unwrap();
    let err_equal = ode
        .times
        .iter()
        .zip(&ode.states)
        .map(|(&t, s)| {
            let c = deterministic_solution_equal(&equal, s0, t).unwrap();
            rel_err(s.x, c.x).max(rel_err(s.y, c.y))
        })
        .fold(0.0, f64::max);

    let unequal = ModelParams::new(3, 2, 2.0, 1.0, 1.0, Profile::Linear).unwrap();
    let s1 = State::new(1.0, 1.0);
    let t_star = blowup_time(&unequal, s1).unwrap().unwrap();
    let ode = ode_reference(&unequal, s1, 0.99 * t_star, true).unwrap();
    let err_unequal = ode
        .times
        .iter()
        .zip(&ode.states)
        .map(|(&t, s)| {
            let c = deterministic_solution_unequal(&unequal, s1, t).unwrap();
            rel_err(s.x, c.x).max(rel_err(s.y, c.y))
        })
        .fold(0.0, f64::max);

    let detected = match ode_reference(&unequal, s1, 2.0, true) {
        Err(Error::BlowUpDetected { last_time }) => last_time,
        other => panic!("expected a detected blow-up, got {other:?}"),
    };

    verdict(
        1,
        "closed forms vs Dormand-Prince, blow-up time",
        &[
            ("m=n=2 relative error", err_equal <= TOL),
            ("m=3,n=2 relative error", err_unequal <= TOL),
            ("closed-form t* = 1", (t_star - 1.0).abs() <= BLOWUP_TOL),
            ("ODE blow-up near t*", (detected - t_star).abs() <= BLOWUP_TOL),
        ],
        start.elapsed(),
        Duration::from_secs(5),
        format!("err_equal={err_equal:.2e} err_unequal={err_unequal:.2e} t*={t_star} ode_last={detected:.8}"),
    );
}

// ---------------------------------------------------------------- 2

/// `sin(x) cos(y) + x^2 y` and its exact partials.
fn smooth(s: State) -> LyapunovValue {
    LyapunovValue {
        value: s.x.sin() * s.y.cos() + s.x * s.x * s.y,
        dx: s.x.cos() * s.y.cos() + 2.0 * s.x * s.y,
        dy: -s.x.sin() * s.y.sin() + s.x * s.x,
        dxx: -s.x.sin() * s.y.cos() + 2.0 * s.y,
        dyy: -s.x.sin() * s.y.cos(),
    }
}

fn central_partials(f: impl Fn(State) -> f64, s: State, h: f64) -> LyapunovValue {
    let (px, mx) = (f(State::new(s.x + h, s.y)), f(State::new(s.x - h, s.y)));
    let (py, my) = (f(State::new(s.x, s.y + h)), f(State::new(s.x, s.y - h)));
    let c = f(s);
    LyapunovValue {
        value: c,
        dx: (px - mx) / (2.0 * h),
        dy: (py - my) / (2.0 * h),
        dxx: (px - 2.0 * c + mx) / (h * h),
        dyy: (py - 2.0 * c + my) / (h * h),
    }
}

#[test]
fn c02_generator_matches_closed_form() {
    const TOL: f64 = 1e-12;
    const MIN_ORDER: f64 = 1.9;
    let _g = serial();
    let start = Instant::now();
    let p = ModelParams::config_a();
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let s = State::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let lv = generator_apply(&p, &v1(s), s).unwrap();
        let closed = analytic_lv1(&p, s).unwrap();
        worst = worst.max((lv - closed).abs() / closed.abs().max(1.0));
    }

    let s = State::new(0.8, -0.6);
    let exact = generator_apply(&p, &smooth(s), s).unwrap();
    let f = |s: State| smooth(s).value;
    let err = |h: f64| (generator_apply(&p, &central_partials(f, s, h), s).unwrap() - exact).abs();
    let (h, e1, e2) = (1e-2, err(1e-2), err(5e-3));
    let order = (e1 / e2).log2();

    verdict(
        2,
        "generator vs closed-form L v1, finite-difference order",
        &[("L v1 relative error", worst <= TOL), ("FD order", order >= MIN_ORDER)],
        start.elapsed(),
        Duration::from_secs(10),
        format!("max_rel={worst:.2e} order={order:.3} (h={h}, errors {e1:.2e} -> {e2:.2e})"),
    );
}

// ---------------------------------------------------------------- 3

#[test]
fn c03_v1_drift_on_r1() {
    const SAMPLES: usize = 100_000;
    let _g = serial();
    let start = Instant::now();
    let p = ModelParams::config_a();
    let k = derive_constants(&p).unwrap();
    let r = verify_drift_condition(&p, &k, DriftFunction::V1, &RegionSampler::new(Region::R1, SAMPLES, 3)).unwrap();

    let mut bad = k.clone();
    bad.set("c1", 0.1).unwrap();
    let sabotaged =
        verify_drift_condition(&p, &bad, DriftFunction::V1, &RegionSampler::new(Region::R1, SAMPLES, 3)).unwrap();

    verdict(
        3,
        "v1 drift inequality on R1, sabotaged c1 detected",
        &[
            ("no violations", r.pass && r.max_violation <= 0.0),
            ("sample count", r.count >= SAMPLES),
            ("c1 = 0.1 fails", !sabotaged.pass && sabotaged.max_violation > 0.0),
        ],
        start.elapsed(),
        Duration::from_secs(30),
        format!(
            "max_violation={:.3e} min_u={:?} sabotaged_violation={:.3e}",
            r.max_violation, r.min_u, sabotaged.max_violation
        ),
    );
}

// ---------------------------------------------------------------- 4

#[test]
fn c04_v2_v3_drift_on_axis_regions() {
    const SAMPLES: usize = 100_000;
    let _g = serial();
    let start = Instant::now();
    let p = ModelParams::config_a();
    let k = derive_constants(&p).unwrap();
    let r2 = verify_drift_condition(&p, &k, DriftFunction::V2, &RegionSampler::new(Region::R2, SAMPLES, 4)).unwrap();
    let r3 = verify_drift_condition(&p, &k, DriftFunction::V3, &RegionSampler::new(Region::R3, SAMPLES, 4)).unwrap();

    verdict(
        4,
        "v2 on R2 and v3 on R3 (u^q form)",
        &[
            ("v2 no violations", r2.pass && r2.max_violation <= 0.0),
            ("v3 no violations", r3.pass && r3.max_violation <= 0.0),
        ],
        start.elapsed(),
        Duration::from_secs(60),
        format!(
            "v2 max_violation={:.3e} v3 max_violation={:.3e} v3 u^2-form={:?}",
            r2.max_violation, r3.max_violation, r3.secondary_max_violation
        ),
    );
}

// ---------------------------------------------------------------- 5

fn fitted(p: &ModelParams, k: &LyapunovConstants, which: DriftFunction, count: usize) -> f64 {
    let r = verify_drift_condition(p, k, which, &RegionSampler::new(which.region(), count, 5)).unwrap();
    assert!(r.pass, "{r:?}");
    r.empirical_constant.unwrap()
}

#[test]
fn c05_blended_functions_on_overlaps() {
    const STABLE: f64 = 0.01;
    let _g = serial();
    let start = Instant::now();
    let p = ModelParams::config_a();
    let k = derive_constants(&p).unwrap();

    let mut checks = Vec::new();
    let mut detail = String::new();
    for which in [DriftFunction::V12, DriftFunction::V13] {
        let (small, large) = (fitted(&p, &k, which, 10_000), fitted(&p, &k, which, 100_000));
        let change = rel_err(large, small);
        detail.push_str(&format!("{} C: {small:.5e} -> {large:.5e} ({:.3}%) ", which.name(), 100.0 * change));
        checks.push((change < STABLE && large.is_finite(), which));
    }

    // Exactness outside the transition band.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut outer, mut inner, mut exact) = (0, 0, true);
    let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    for _ in 0..20_000 {
        // |x| >= c2 (resp. |y| >= c3) with |x| y^2 in [c1 / 3, 10 c1], so lambda spans the band.
        let big = 10f64.powf(rng.random_range(0.0..1.0));
        let mono = k.c1 * 10f64.powf(rng.random_range(-0.5..1.0));
        let x = k.c2 * big * sign(&mut rng);
        let s12 = State::new(x, (mono / x.abs()).sqrt() * sign(&mut rng));
        let y = k.c3 * big * sign(&mut rng);
        let s13 = State::new(mono / (y * y) * sign(&mut rng), y);
        for (target, s, local) in [(BlendTarget::V2, s12, v2(&k, s12)), (BlendTarget::V3, s13, v3(&k, s13))] {
            let lam = lambda_fn(&k, p.m, p.n, s);
            let b = v_blend(target, &p, &k, s);
            if lam >= UPPER_KNOT {
                outer += 1;
                exact &= b == v1(s);
            } else if lam <= LOWER_KNOT {
                inner += 1;
                exact &= b == local;
            }
        }
    }
    detail.push_str(&format!("exactness points: {outer} outer, {inner} inner"));

    verdict(
        5,
        "v12/v13 fitted constants stabilise, blend exact outside the band",
        &[
            ("v12 C within 1%", checks[0].0),
            ("v13 C within 1%", checks[1].0),
            ("blend exact", exact && outer > 100 && inner > 100),
        ],
        start.elapsed(),
        Duration::from_secs(60),
        detail,
    );
}

// ---------------------------------------------------------------- 6

#[test]
fn c06_global_function_is_coercive_with_drift() {
    const SAMPLES: usize = 100_000;
    let _g = serial();
    let start = Instant::now();
    let p = ModelParams::config_a();
    let k = derive_constants(&p).unwrap();
    let gv = GlobalLyapunov::new(&p, &k).unwrap();
    let radius = box_radius(&k);

    let disk = RegionSampler::new(Region::Disk, SAMPLES, 6).samples(&k, p.m, p.n, p.q).unwrap();
    let min_on_disk = disk.iter().map(|s| gv.eval(*s).value).fold(f64::INFINITY, f64::min);

    // Rays out to 1e4 R on a geometric grid.
    let (mut ray_min, mut growth_ok, mut far_min) = (f64::INFINITY, true, f64::INFINITY);
    for a in 0..16 {
        let theta = 2.0 * std::f64::consts::PI * a as f64 / 16.0;
        let (c, s) = (theta.cos(), theta.sin());
        let steps = 200;
        let (r0, r1) = (radius / 1e3, radius * 1e4);
        let mut last = 0.0;
        for i in 0..=steps {
            let r = r0 * (r1 / r0).powf(i as f64 / steps as f64);
            let v = gv.eval(State::new(r * c, r * s)).value;
            ray_min = ray_min.min(v);
            last = v;
        }
        growth_ok &= last >= 0.25 * r1 * r1;
        far_min = far_min.min(last);
    }

    let report = verify_drift_condition(&p, &k, DriftFunction::Global, &RegionSampler::new(Region::Disk, SAMPLES, 6)).unwrap();
    let a1 = report.drift_spec().map(|d| d.a1).unwrap_or(f64::NAN);
    let c = report.empirical_constant.unwrap_or(f64::NAN);
    let holdout = verify_drift_condition(&p, &k, DriftFunction::Global, &RegionSampler::new(Region::Disk, SAMPLES, 66))
        .unwrap()
        .empirical_constant
        .unwrap_or(f64::NAN);

    verdict(
        6,
        "global V >= 1, coercive, LV <= -a1 V + C",
        &[
            ("V >= 1 on disk", min_on_disk >= 1.0),
            ("V >= 1 on rays", ray_min >= 1.0),
            ("V >= r^2/4 far out", growth_ok),
            ("V large far out", far_min > 1e10),
            ("a1 > 0, C finite", a1 > 0.0 && c.is_finite() && report.pass),
        ],
        start.elapsed(),
        Duration::from_secs(60),
        format!("min_disk={min_on_disk:.4} min_rays={ray_min:.4} far_min={far_min:.3e} a1={a1} C={c:.5e} holdout_C={holdout:.5e}"),
    );
}

// ---------------------------------------------------------------- 7

#[test]
fn c07_ledger_invariants() {
    let _g = serial();
    let start = Instant::now();
    let mut checks = Vec::new();
    let mut failing = Vec::new();
    for name in PRESETS {
        let p = params(name);
        let k = derive_constants(&p).unwrap();
        let ok = k.all_invariants_hold(&p);
        if !ok {
            failing.push(name);
        }
        checks.push(ok);
    }
    let a = derive_constants(&ModelParams::config_a()).unwrap();
    verdict(
        7,
        "ledger invariants for config-A and the six figure configs",
        &[
            ("all invariants hold", checks.iter().all(|c| *c)),
            ("k2 = 51 exactly", a.k2 == 51.0),
            ("k3 = 34 exactly", a.k3 == 34.0),
        ],
        start.elapsed(),
        Duration::from_secs(5),
        format!("configs={} failing={failing:?} c1={} b={}", PRESETS.len(), a.c1, a.b),
    );
}

// ---------------------------------------------------------------- 8

#[test]
fn c08_tamed_scheme_stays_finite_plain_euler_blows_up() {
    const PATHS: usize = 100;
    const MIN_EULER_BLOWUPS: usize = 91;
    let _g = serial();
    let start = Instant::now();

    let mut non_finite = 0;
    for name in &PRESETS[1..] {
        let p = params(name);
        let cfg = IntegratorConfig::new(Scheme::TamedEuler, 1e-4, 100_000, 0);
        let ens = simulate_ensemble(&p, &cfg, State::ORIGIN, PATHS, &[2.5, 5.0, 7.5, 10.0]).unwrap();
        non_finite += ens.iter().flat_map(|e| &e.states).filter(|s| !s.is_finite()).count();
    }

    let p = params("fig1-m2n9-plus");
    let blowups = (0..PATHS as u64)
        .filter(|&seed| {
            let cfg = IntegratorConfig::new(Scheme::Euler, 1e-2, 1000, seed);
            simulate_path(&p, &cfg, State::new(50.0, 50.0)).unwrap().blowup_flag
        })
        .count();

    verdict(
        8,
        "tamed scheme finite on six figure configs, plain Euler blows up",
        &[("tamed all finite", non_finite == 0), ("Euler blow-ups > 90", blowups >= MIN_EULER_BLOWUPS)],
        start.elapsed(),
        Duration::from_secs(300),
        format!("non_finite={non_finite} euler_blowups={blowups}/{PATHS}"),
    );
}

// ---------------------------------------------------------------- 9

#[test]
fn c09_bounded_in_probability() {
    const N: usize = 10_000;
    const DELTA: f64 = 0.01;
    const LEVEL: f64 = 0.995;
    let _g = serial();
    let start = Instant::now();
    let p = params("fig1-m2n9-plus");
    let cfg = IntegratorConfig::new(Scheme::TamedEuler, 1e-4, 100_000, 9);
    let ens = simulate_ensemble(&p, &cfg, State::ORIGIN, N, &[5.0, 6.0, 8.0, 10.0]).unwrap();
    let radius = radius_quantile(&ens[0], LEVEL).unwrap();
    let report = from_ensembles(&ens[1..], radius, DELTA);

    verdict(
        9,
        "tail fraction beyond the calibrated radius at t = 6, 8, 10",
        &[("tails <= delta", report.holds())],
        start.elapsed(),
        Duration::from_secs(300),
        format!("M={radius:.4} tails={:?}", report.empirical_tail),
    );
}

// ---------------------------------------------------------------- 10

#[test]
fn c10_exponential_mixing() {
    const FLOOR_FACTOR: f64 = 10.0;
    const MIN_R2: f64 = 0.9;
    let _g = serial();
    let start = Instant::now();
    let p = ModelParams::config_a();
    let k = derive_constants(&p).unwrap();
    let integ = IntegratorConfig::new(Scheme::TamedEuler, 1e-3, 1, 0);
    let checkpoints: Vec<f64> = (1..=16).map(|i| 0.5 * i as f64).collect();
    let mut cfg = MixingConfig::new(State::new(5.0, 5.0), State::new(-5.0, -5.0), 4096, checkpoints, 7);
    cfg.floor_factor = FLOOR_FACTOR;
    let series = mixing_series(&p, &k, &integ, &cfg).unwrap();
    let fit = fit_series(&series, FLOOR_FACTOR);
    let last = *series.w1.last().unwrap();
    let floor = series.noise_floor;

    let (c, r2, points) = fit.as_ref().map_or((f64::NAN, f64::NAN, 0), |f| (f.c, f.r2, f.points));
    verdict(
        10,
        "W1 decays exponentially between ensembles from (5,5) and (-5,-5)",
        &[
            ("fit available", fit.is_ok()),
            ("c > 0", c > 0.0),
            ("R^2 >= 0.9", r2 >= MIN_R2),
            ("final W1 < 10 x floor", last < FLOOR_FACTOR * floor),
            ("W_V lower bound finite", series.wv_lb.iter().all(|l| l.is_finite() && *l >= 0.0)),
        ],
        start.elapsed(),
        Duration::from_secs(600),
        format!(
            "c={c:.4} R2={r2:.4} points={points} floor={floor:.4} final_w1={last:.4} w1={:?} wv_lb={:?}",
            series.w1.iter().map(|w| (w * 1e4).round() / 1e4).collect::<Vec<_>>(),
            series.wv_lb.iter().map(|w| (w * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    );
}

// ---------------------------------------------------------------- 11

#[test]
fn c11_fitter_metric_and_dynkin() {
    const FIT_TOL: f64 = 1e-12;
    const METRIC_SLACK: f64 = 1e-12;
    const DYNKIN_SAMPLES: u64 = 1_000_000;
    let _g = serial();
    let start = Instant::now();

    let times: Vec<f64> = (0..12).map(|i| 0.5 * i as f64).collect();
    let values: Vec<f64> = times.iter().map(|t| 2.0 * (-0.7 * t).exp()).collect();
    let fit = fit_exponential(&times, &values).unwrap();
    let fit_ok = (fit.big_c - 2.0).abs() <= FIT_TOL && (fit.c - 0.7).abs() <= FIT_TOL;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cloud = |n: usize, rng: &mut ChaCha8Rng| -> Vec<State> {
        let shift = rng.random_range(-2.0..2.0);
        (0..n).map(|_| State::new(rng.random_range(-1.0..1.0) + shift, rng.random_range(-1.0..1.0))).collect()
    };
    let mut axioms = true;
    for _ in 0..1000 {
        let (a, b, c) = (cloud(12, &mut rng), cloud(12, &mut rng), cloud(12, &mut rng));
        let ab = empirical_wasserstein1(&a, &b).unwrap();
        let ba = empirical_wasserstein1(&b, &a).unwrap();
        let bc = empirical_wasserstein1(&b, &c).unwrap();
        let ac = empirical_wasserstein1(&a, &c).unwrap();
        let aa = empirical_wasserstein1(&a, &a).unwrap();
        axioms &= ab >= 0.0 && aa.abs() <= METRIC_SLACK && ab == ba && ac <= ab + bc + METRIC_SLACK;
    }

    // E[v1(X_dt)] - v1(x0) against dt L v1(x0).
    let p = ModelParams::config_a();
    let (x0, dt) = (State::new(1.0, 0.5), 1e-3);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for path in 0..DYNKIN_SAMPLES {
        let s = step_tamed(&p, x0, dt, NoiseStream::at(11, path, 0)).unwrap();
        let d = (v1(s).value - v1(x0).value) / dt;
        sum += d;
        sum2 += d * d;
    }
    let n = DYNKIN_SAMPLES as f64;
    let mean = sum / n;
    let se = ((sum2 / n - mean * mean) / n).sqrt();
    let expected = analytic_lv1(&p, x0).unwrap();
    let z = (mean - expected) / se;

    verdict(
        11,
        "fitter recovery, W1 metric axioms, one-step Dynkin check",
        &[("fit recovers (2, 0.7)", fit_ok), ("W1 axioms", axioms), ("Dynkin within 3 sigma", z.abs() <= 3.0)],
        start.elapsed(),
        Duration::from_secs(60),
        format!("C={} c={} Lv1={expected} mc={mean:.4}+-{se:.4} z={z:.2}", fit.big_c, fit.c),
    );
}
