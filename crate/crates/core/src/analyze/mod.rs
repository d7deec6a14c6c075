//! Trajectory shape analysis.

pub mod classify;
pub mod fit;
pub mod order;
pub mod peaks;

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{conserved_quantity, LVParams, State};
use crate::integrate::{IntegrateError, Trajectory};

pub use classify::{classify, ClassifierThresholds, Evidence, PeakStats, Regime, RegimeReport};
pub use fit::{fit_linear, fit_samples, LinearFit};
pub use order::{estimate_order, OrderEstimate};
pub use peaks::{filter_by_prominence, find_peaks, Peak};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyzeError {
    #[error("window holds {samples} samples; at least 3 are needed")]
    WindowTooSmall { samples: usize },
    #[error("all sample times coincide")]
    DegenerateTimes,
    #[error("step h = {h} diverged")]
    UnstableStep { h: f64 },
    #[error("{0}")]
    InvalidSteps(String),
    #[error("unknown threshold `{0}`")]
    UnknownThreshold(String),
    #[error("threshold `{key}` has invalid value {value}")]
    InvalidThreshold { key: String, value: f64 },
    #[error("unknown regime `{0}`")]
    UnknownRegime(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Which population a series refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Series {
    H,
    P,
}

impl Series {
    #[inline]
    pub fn of(&self, s: &State) -> f64 {
        match self {
            Series::H => s.h,
            Series::P => s.p,
        }
    }

    pub fn values(&self, traj: &Trajectory) -> Vec<f64> {
        traj.states().iter().map(|s| self.of(s)).collect()
    }
}

/// Largest relative change of the first integral along the trajectory,
/// `max |V(t) − V(t0)| / |V(t0)|`. `None` when a state leaves the open
/// quadrant, where the integral is undefined.
pub fn conserved_drift(traj: &Trajectory, params: &LVParams) -> Option<f64> {
    let v0 = conserved_quantity(traj.first(), params).ok()?;
    let scale = if v0 != 0.0 { v0.abs() } else { 1.0 };
    traj.states().iter().try_fold(0.0f64, |worst, &s| {
        let v = conserved_quantity(s, params).ok()?;
        Some(worst.max((v - v0).abs() / scale))
    })
}
