//! Local maxima with a prominence filter.

use serde::Serialize;

use super::Series;
use crate::integrate::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub index: usize,
    pub time: f64,
    pub value: f64,
    pub prominence: f64,
    pub series: Series,
}

/// Indices of local maxima by three-point comparison. A flat-topped maximum
/// is reported at its first sample. The end samples are never peaks.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i - 1] < values[i] {
            let mut j = i + 1;
            while j < n && values[j] == values[i] {
                j += 1;
            }
            if j < n && values[j] < values[i] {
                out.push(i);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Height of `values[peak]` above the higher of the two valleys that separate
/// it from the nearest strictly higher sample on each side (or from the end
/// of the series when there is none).
pub fn prominence(values: &[f64], peak: usize) -> f64 {
    let top = values[peak];
    let left_min = values[..peak]
        .iter()
        .rev()
        .take_while(|&&v| v <= top)
        .fold(top, |m, &v| m.min(v));
    let right_min = values[peak + 1..]
        .iter()
        .take_while(|&&v| v <= top)
        .fold(top, |m, &v| m.min(v));
    top - left_min.max(right_min)
}

/// `(index, prominence)` for every local maximum whose prominence is at
/// least `min_prominence`.
pub fn peaks_in(values: &[f64], min_prominence: f64) -> Vec<(usize, f64)> {
    local_maxima(values)
        .into_iter()
        .map(|i| (i, prominence(values, i)))
        .filter(|&(_, prom)| prom >= min_prominence)
        .collect()
}

pub fn find_peaks(traj: &Trajectory, series: Series, min_prominence: f64) -> Vec<Peak> {
    assert!(min_prominence >= 0.0, "min_prominence must be non-negative");
    let values = series.values(traj);
    peaks_in(&values, min_prominence)
        .into_iter()
        .map(|(index, prominence)| Peak {
            index,
            time: traj.time(index),
            value: values[index],
            prominence,
            series,
        })
        .collect()
}

pub fn filter_by_prominence(peaks: &[Peak], min_prominence: f64) -> Vec<Peak> {
    peaks
        .iter()
        .copied()
        .filter(|p| p.prominence >= min_prominence)
        .collect()
}

/// `frac` of the series range, the default prominence floor.
pub fn relative_prominence(values: &[f64], frac: f64) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo.is_finite() && hi.is_finite() {
        frac * (hi - lo)
    } else {
        0.0
    }
}
