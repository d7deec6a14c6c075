//! Ordinary least-squares line fits over time windows.

use std::ops::Range;

use serde::Serialize;

use super::{AnalyzeError, Series};
use crate::integrate::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: f64,
    pub max_abs_residual: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
}

impl LinearFit {
    /// Fitted value at `t`.
    pub fn predict(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }

    /// Fitted value at the centre of the window.
    pub fn midpoint_value(&self) -> f64 {
        self.predict(0.5 * (self.window.0 + self.window.1))
    }
}

/// Fits `values` against `times`.
///
/// When the values have zero spread, `r_squared` is 1 for a perfect fit and 0
/// otherwise.
pub fn fit_samples(times: &[f64], values: &[f64]) -> Result<LinearFit, AnalyzeError> {
    assert_eq!(
        times.len(),
        values.len(),
        "times and values differ in length"
    );
    let n = times.len();
    if n < 3 {
        return Err(AnalyzeError::WindowTooSmall { samples: n });
    }
    let nf = n as f64;
    let t_mean = times.iter().sum::<f64>() / nf;
    let y_mean = values.iter().sum::<f64>() / nf;

    let (mut sxx, mut sxy, mut ss_tot) = (0.0, 0.0, 0.0);
    for (&t, &y) in times.iter().zip(values) {
        let dt = t - t_mean;
        let dy = y - y_mean;
        sxx += dt * dt;
        sxy += dt * dy;
        ss_tot += dy * dy;
    }
    if sxx == 0.0 {
        return Err(AnalyzeError::DegenerateTimes);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;

    let (mut ss_res, mut max_abs_residual) = (0.0, 0.0f64);
    for (&t, &y) in times.iter().zip(values) {
        let res = (y - y_mean) - slope * (t - t_mean);
        ss_res += res * res;
        max_abs_residual = max_abs_residual.max(res.abs());
    }

    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };

    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        max_abs_residual,
        window: (times[0], times[n - 1]),
        n_samples: n,
    })
}

/// Fits one series over the samples whose time lies in `[t_start, t_end]`.
pub fn fit_linear(
    traj: &Trajectory,
    series: Series,
    window: (f64, f64),
) -> Result<LinearFit, AnalyzeError> {
    let (t_start, t_end) = window;
    let (times, values): (Vec<f64>, Vec<f64>) = traj
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| (traj.time(i), series.of(s)))
        .filter(|&(t, _)| t >= t_start && t <= t_end)
        .unzip();
    fit_samples(&times, &values)
}

/// Fits one series over a range of sample indices.
pub fn fit_indices(
    traj: &Trajectory,
    series: Series,
    range: Range<usize>,
) -> Result<LinearFit, AnalyzeError> {
    let range = range.start.min(traj.len())..range.end.min(traj.len());
    let times: Vec<f64> = range.clone().map(|i| traj.time(i)).collect();
    let values: Vec<f64> = traj.states()[range].iter().map(|s| series.of(s)).collect();
    fit_samples(&times, &values)
}

/// Index range covering the first `frac` of the samples (at least one).
pub fn leading_range(len: usize, frac: f64) -> Range<usize> {
    0..fraction_count(len, frac)
}

/// Index range covering the last `frac` of the samples (at least one).
pub fn trailing_range(len: usize, frac: f64) -> Range<usize> {
    len - fraction_count(len, frac)..len
}

fn fraction_count(len: usize, frac: f64) -> usize {
    ((len as f64 * frac).ceil() as usize).clamp(1.min(len), len)
}
