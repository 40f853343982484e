use crate::error::{Error, Result};

/// Values below this are treated as roundoff and refused by [`decay_fit`].
pub const FIT_FLOOR: f64 = 100.0 * f64::EPSILON;

/// Log-linear least-squares fit `v ≈ C e^{−δt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `max(−slope, 0)`.
    pub rate: f64,
    pub slope: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    /// RMS deviation of `ln v` from the fitted line.
    pub residual: f64,
    pub points: usize,
}

impl DecayFit {
    pub fn envelope(&self, t: f64) -> f64 {
        self.prefactor * (self.slope * t).exp()
    }
}

/// Fits the samples of `series` whose time lies in `window` (inclusive).
pub fn decay_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 && t <= window.1)
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} samples, need at least 2",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some(&(t, v)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::Fit(format!("non-positive value {v} at t = {t}")));
    }
    if let Some(&(t, v)) = pts.iter().find(|p| p.1 < FIT_FLOOR) {
        return Err(Error::Fit(format!("value {v:e} at t = {t} is below the roundoff floor")));
    }
    let n = pts.len() as f64;
    // Logs are taken relative to the first sample so a constant series
    // fits with slope exactly 0.
    let y0 = pts[0].1.ln();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln() - y0).collect();
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all samples share one time".into()));
    }
    let sxy: f64 = pts.iter().zip(&y).map(|(p, y)| (p.0 - tm) * y).sum();
    let slope = sxy / sxx;
    let intercept = y0 + ym - slope * tm;
    let residual = (pts
        .iter()
        .map(|p| (p.1.ln() - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        rate: (-slope).max(0.0),
        slope,
        prefactor: intercept.exp(),
        window,
        residual,
        points: pts.len(),
    })
}

/// `[t_min, t₁]` where `t₁` is the last sample time before the series (from
/// `t_min` on) first drops below `floor`.
pub fn window_above(series: &[(f64, f64)], t_min: f64, floor: f64) -> (f64, f64) {
    let mut end = t_min;
    for &(t, v) in series.iter().filter(|p| p.0 >= t_min) {
        if v < floor {
            break;
        }
        end = t;
    }
    (t_min, end)
}

/// Samples below this fraction of the series maximum are left out of
/// [`auto_decay_fit`].
pub const FIT_RELATIVE_FLOOR: f64 = 1e-9;

/// [`decay_fit`] over `[t₀ + span/10, t₁]`, with `t₁` the last sample before
/// the series drops under `FIT_RELATIVE_FLOOR·max` (or `1000·FIT_FLOOR`).
pub fn auto_decay_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::Fit("empty series".into()));
    };
    let peak = series.iter().map(|p| p.1).fold(0.0, f64::max);
    let floor = (FIT_RELATIVE_FLOOR * peak).max(1e3 * FIT_FLOOR);
    let t_min = first.0 + 0.1 * (last.0 - first.0);
    decay_fit(series, window_above(series, t_min, floor))
}

/// Like [`auto_decay_fit`] for a series that has settled onto its numerical
/// floor by the end: the window also stops at `10·v_last`.
pub fn converged_decay_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::Fit("empty series".into()));
    };
    let peak = series.iter().map(|p| p.1).fold(0.0, f64::max);
    let floor = (FIT_RELATIVE_FLOOR * peak).max(1e3 * FIT_FLOOR).max(10.0 * last.1);
    let t_min = first.0 + 0.1 * (last.0 - first.0);
    decay_fit(series, window_above(series, t_min, floor))
}
