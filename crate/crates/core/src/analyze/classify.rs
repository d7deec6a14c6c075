//! Regime labels for a single trajectory.
//!
//! Rules are tried in order and the first match wins:
//!
//! 1. `DIVERGED`: the run was cut short by the divergence guard.
//! 2. `EQUILIBRIUM`: every sample lies within `eps_eq` (relative) of the
//!    interior fixed point.
//! 3. `NEAR_LINEAR`: the P fit over the final window has `R² ≥ r2_min`.
//! 4. `COLLAPSED`: H stays below `eps_collapse` over the final quarter.
//! 5. `GROWING_OSCILLATION`: at least three H-peaks, each higher than the
//!    previous by more than `growth_min` (relative).
//! 6. `OSCILLATORY`: at least three peaks in H or P; otherwise still
//!    `OSCILLATORY`, with a low-confidence note.
//!
//! All evidence is computed regardless of which rule fires.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fit::{fit_indices, leading_range, trailing_range, LinearFit};
use super::peaks::{find_peaks, relative_prominence, Peak};
use super::{AnalyzeError, Series};
use crate::dynamics::{equilibrium, LVParams};
use crate::integrate::{EarlyStop, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Equilibrium,
    Oscillatory,
    GrowingOscillation,
    NearLinear,
    Collapsed,
    Diverged,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::Equilibrium,
        Regime::Oscillatory,
        Regime::GrowingOscillation,
        Regime::NearLinear,
        Regime::Collapsed,
        Regime::Diverged,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Equilibrium => "EQUILIBRIUM",
            Regime::Oscillatory => "OSCILLATORY",
            Regime::GrowingOscillation => "GROWING_OSCILLATION",
            Regime::NearLinear => "NEAR_LINEAR",
            Regime::Collapsed => "COLLAPSED",
            Regime::Diverged => "DIVERGED",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = AnalyzeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Regime::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| AnalyzeError::UnknownRegime(s.to_string()))
    }
}

/// Classifier thresholds. All are overridable by name through
/// [`ClassifierThresholds::set`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifierThresholds {
    /// Relative distance from the fixed point that still counts as resting.
    pub eps_eq: f64,
    /// Prey level below which the population counts as collapsed.
    pub eps_collapse: f64,
    pub r2_min: f64,
    /// Minimum relative growth between consecutive H-peaks.
    pub growth_min: f64,
    /// Peak prominence floor as a fraction of the series range.
    pub prominence_frac: f64,
    /// Leading window, as a fraction of the samples.
    pub beginning_frac: f64,
    /// Trailing window used for the linearity rule.
    pub final_frac: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            eps_eq: 1e-6,
            eps_collapse: 1e-3,
            r2_min: 0.999,
            growth_min: 0.01,
            prominence_frac: 0.01,
            beginning_frac: 0.1,
            final_frac: 0.5,
        }
    }
}

impl ClassifierThresholds {
    pub const KEYS: [&'static str; 7] = [
        "eps_eq",
        "eps_collapse",
        "r2_min",
        "growth_min",
        "prominence_frac",
        "beginning_frac",
        "final_frac",
    ];

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "eps_eq" => self.eps_eq,
            "eps_collapse" => self.eps_collapse,
            "r2_min" => self.r2_min,
            "growth_min" => self.growth_min,
            "prominence_frac" => self.prominence_frac,
            "beginning_frac" => self.beginning_frac,
            "final_frac" => self.final_frac,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), AnalyzeError> {
        let slot = match key {
            "eps_eq" => &mut self.eps_eq,
            "eps_collapse" => &mut self.eps_collapse,
            "r2_min" => &mut self.r2_min,
            "growth_min" => &mut self.growth_min,
            "prominence_frac" => &mut self.prominence_frac,
            "beginning_frac" => &mut self.beginning_frac,
            "final_frac" => &mut self.final_frac,
            _ => return Err(AnalyzeError::UnknownThreshold(key.to_string())),
        };
        *slot = value;
        self.validate()
    }

    pub fn validate(&self) -> Result<(), AnalyzeError> {
        let bad = |key: &str, value: f64| {
            Err(AnalyzeError::InvalidThreshold {
                key: key.to_string(),
                value,
            })
        };
        for key in ["eps_eq", "eps_collapse", "growth_min", "prominence_frac"] {
            let v = self.get(key).unwrap();
            if !(v.is_finite() && v >= 0.0) {
                return bad(key, v);
            }
        }
        if !(0.0..=1.0).contains(&self.r2_min) {
            return bad("r2_min", self.r2_min);
        }
        for key in ["beginning_frac", "final_frac"] {
            let v = self.get(key).unwrap();
            if !(v > 0.0 && v <= 1.0) {
                return bad(key, v);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakStats {
    pub series: Series,
    pub min_prominence: f64,
    pub peaks: Vec<Peak>,
    /// Every consecutive pair grows by more than `growth_min` (relative).
    pub strictly_growing: bool,
}

impl PeakStats {
    pub fn count(&self) -> usize {
        self.peaks.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub early_stop: Option<EarlyStop>,
    /// Largest relative distance from the interior fixed point, when one
    /// exists.
    pub equilibrium_deviation: Option<f64>,
    pub final_quarter_max_h: f64,
    pub collapsed_h: bool,
    pub final_fit_p: Option<LinearFit>,
    pub final_fit_h: Option<LinearFit>,
    pub beginning_fit_p: Option<LinearFit>,
    pub beginning_fit_h: Option<LinearFit>,
    pub h_peaks: PeakStats,
    pub p_peaks: PeakStats,
    pub negative_population: bool,
    pub note: Option<String>,
}

impl Evidence {
    /// R² of the final-window P fit, the quantity the linearity rule tests.
    pub fn best_r_squared(&self) -> Option<f64> {
        self.final_fit_p.map(|f| f.r_squared)
    }

    pub fn fits(&self) -> Vec<(&'static str, Series, LinearFit)> {
        [
            ("beginning", Series::H, self.beginning_fit_h),
            ("beginning", Series::P, self.beginning_fit_p),
            ("final", Series::H, self.final_fit_h),
            ("final", Series::P, self.final_fit_p),
        ]
        .into_iter()
        .filter_map(|(w, s, f)| f.map(|f| (w, s, f)))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub label: Regime,
    pub evidence: Evidence,
}

fn peak_stats(traj: &Trajectory, series: Series, th: &ClassifierThresholds) -> PeakStats {
    let values = series.values(traj);
    let min_prominence = relative_prominence(&values, th.prominence_frac);
    let peaks = find_peaks(traj, series, min_prominence);
    let strictly_growing = peaks.len() >= 2
        && peaks
            .windows(2)
            .all(|w| w[1].value - w[0].value > th.growth_min * w[0].value.abs());
    PeakStats {
        series,
        min_prominence,
        peaks,
        strictly_growing,
    }
}

pub fn collect_evidence(
    traj: &Trajectory,
    params: &LVParams,
    th: &ClassifierThresholds,
) -> Evidence {
    let n = traj.len();
    let states = traj.states();

    let equilibrium_deviation = equilibrium(params).ok().map(|eq| {
        let scale = eq.max_abs();
        let scale = if scale > 0.0 { scale } else { 1.0 };
        states
            .iter()
            .map(|s| s.distance(&eq) / scale)
            .fold(0.0, f64::max)
    });

    let quarter = trailing_range(n, 0.25);
    let final_quarter_max_h = states[quarter.clone()]
        .iter()
        .map(|s| s.h)
        .fold(f64::NEG_INFINITY, f64::max);
    let collapsed_h = !quarter.is_empty() && final_quarter_max_h < th.eps_collapse;

    let tail = trailing_range(n, th.final_frac);
    let head = leading_range(n, th.beginning_frac);

    Evidence {
        early_stop: traj.early_stop(),
        equilibrium_deviation,
        final_quarter_max_h,
        collapsed_h,
        final_fit_p: fit_indices(traj, Series::P, tail.clone()).ok(),
        final_fit_h: fit_indices(traj, Series::H, tail).ok(),
        beginning_fit_p: fit_indices(traj, Series::P, head.clone()).ok(),
        beginning_fit_h: fit_indices(traj, Series::H, head).ok(),
        h_peaks: peak_stats(traj, Series::H, th),
        p_peaks: peak_stats(traj, Series::P, th),
        negative_population: traj.has_negative_population(),
        note: None,
    }
}

pub fn classify(traj: &Trajectory, params: &LVParams, th: &ClassifierThresholds) -> RegimeReport {
    let mut evidence = collect_evidence(traj, params, th);
    let label = if evidence.early_stop.is_some() {
        Regime::Diverged
    } else if evidence
        .equilibrium_deviation
        .is_some_and(|d| d < th.eps_eq)
    {
        Regime::Equilibrium
    } else if evidence.best_r_squared().is_some_and(|r2| r2 >= th.r2_min) {
        Regime::NearLinear
    } else if evidence.collapsed_h {
        Regime::Collapsed
    } else if evidence.h_peaks.count() >= 3 && evidence.h_peaks.strictly_growing {
        Regime::GrowingOscillation
    } else if evidence.h_peaks.count() >= 3 || evidence.p_peaks.count() >= 3 {
        Regime::Oscillatory
    } else {
        evidence.note = Some(format!(
            "low confidence: only {} H-peaks and {} P-peaks detected",
            evidence.h_peaks.count(),
            evidence.p_peaks.count()
        ));
        Regime::Oscillatory
    };
    RegimeReport { label, evidence }
}
