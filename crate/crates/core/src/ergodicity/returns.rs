use serde::Serialize;

use crate::error::{Error, Result};
use crate::sde::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReturnTimeSummary {
    pub count: usize,
    pub mean: f64,
    pub max: f64,
    pub durations: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
    /// Slope of `ln P(duration >= t)` against `t`; negative for exponential tails.
    pub log_survival_slope: Option<f64>,
}

const BINS: usize = 20;

/// Durations of completed excursions outside the disk of the given radius,
/// measured from the first recorded state outside to the first back inside.
/// An excursion still open at the end of the path is dropped.
pub fn return_time_stats(traj: &Trajectory, radius: f64) -> Result<ReturnTimeSummary> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
    }
    let mut durations = vec![];
    let mut left_at: Option<f64> = None;
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        let outside = s.norm() > radius;
        match (outside, left_at) {
            (true, None) => left_at = Some(t),
            (false, Some(t0)) => {
                durations.push(t - t0);
                left_at = None;
            }
            _ => {}
        }
    }
    if durations.is_empty() {
        return Ok(ReturnTimeSummary::default());
    }
    let count = durations.len();
    let mean = durations.iter().sum::<f64>() / count as f64;
    let max = durations.iter().copied().fold(0.0, f64::max);
    let width = if max > 0.0 { max / BINS as f64 } else { 1.0 };
    let mut histogram: Vec<HistogramBin> = (0..BINS)
        .map(|b| HistogramBin { lo: b as f64 * width, hi: (b + 1) as f64 * width, count: 0 })
        .collect();
    for &d in &durations {
        let b = ((d / width) as usize).min(BINS - 1);
        histogram[b].count += 1;
    }
    Ok(ReturnTimeSummary {
        count,
        mean,
        max,
        log_survival_slope: log_survival_slope(&durations),
        durations,
        histogram,
    })
}

fn log_survival_slope(durations: &[f64]) -> Option<f64> {
    let mut d = durations.to_vec();
    d.sort_by(f64::total_cmp);
    let n = d.len() as f64;
    // empirical P(D >= d_i) at each sorted duration
    let pts: Vec<(f64, f64)> = d
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, ((n - i as f64) / n).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if stt == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum::<f64>() / stt)
}
