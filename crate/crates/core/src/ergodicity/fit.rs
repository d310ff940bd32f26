use serde::Serialize;

use crate::error::{Error, Result};

/// `d(t) ~ C exp(-c t)` fitted by least squares on `ln d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpFit {
    #[serde(rename = "C")]
    pub big_c: f64,
    pub c: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits on the strictly positive, finite entries; fewer than three is an error.
pub fn fit_exponential(times: &[f64], values: &[f64]) -> Result<ExpFit> {
    let unavailable = |reason: String| Error::FitUnavailable {
        reason,
        times: times.to_vec(),
        values: values.to_vec(),
    };
    if times.len() != values.len() {
        return Err(unavailable(format!("{} times but {} values", times.len(), values.len())));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, d)| t.is_finite() && d.is_finite() && **d > 0.0)
        .map(|(&t, &d)| (t, d.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(unavailable(format!("{} usable points, need at least 3", pts.len())));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if stt == 0.0 {
        return Err(unavailable("all usable points share one time".into()));
    }
    let stl: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
    let slope = stl / stt;
    let intercept = lm - slope * tm;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - lm).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ExpFit { big_c: intercept.exp(), c: -slope, r2, points: pts.len() })
}
