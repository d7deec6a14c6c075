//! Regime maps over coefficient grids.
//!
//! Cells are independent: each one builds its own parameters, runs
//! [`simulate`] and [`classify()`], and records a summary. Cells run in
//! parallel. Records come back in row-major order (the last axis varies
//! fastest) whatever order the cells finish in.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analyze::{classify, ClassifierThresholds, Regime};
use crate::dynamics::{InitialCondition, LVParams};
use crate::integrate::{simulate, IntegrationConfig, Method, DEFAULT_DIVERGENCE_BOUND};

pub const DEFAULT_MAX_CELLS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("grid has {cells} cells, above the cap of {cap}")]
    GridTooLarge { cells: u128, cap: usize },
    #[error("invalid axis `{axis}`: {message}")]
    InvalidAxis { axis: SweepParam, message: String },
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("cell {index} has invalid inputs: {message}")]
    InvalidPoint { index: usize, message: String },
    #[error("unknown sweep parameter `{0}`")]
    UnknownParam(String),
    #[error("unknown spacing `{0}` (expected linear or log)")]
    UnknownSpacing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    R,
    A,
    B,
    M,
    /// Integration step.
    H,
    H0,
    P0,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::R,
        SweepParam::A,
        SweepParam::B,
        SweepParam::M,
        SweepParam::H,
        SweepParam::H0,
        SweepParam::P0,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::R => "r",
            SweepParam::A => "a",
            SweepParam::B => "b",
            SweepParam::M => "m",
            SweepParam::H => "h",
            SweepParam::H0 => "h0",
            SweepParam::P0 => "p0",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| SweepError::UnknownParam(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl Spacing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }
}

impl FromStr for Spacing {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            _ => Err(SweepError::UnknownSpacing(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |message: String| {
            Err(SweepError::InvalidAxis {
                axis: self.param,
                message,
            })
        };
        if self.count < 2 {
            return bad(format!("count must be at least 2, got {}", self.count));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return bad(format!(
                "need finite min < max, got [{}, {}]",
                self.min, self.max
            ));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return bad(format!("log spacing needs min > 0, got {}", self.min));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i == 0 {
            return self.min;
        }
        if i + 1 >= self.count {
            return self.max;
        }
        let frac = i as f64 / (self.count - 1) as f64;
        match self.spacing {
            Spacing::Linear => self.min + (self.max - self.min) * frac,
            Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * frac).exp(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Grid definition plus the fixed values used for every unswept quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub params: LVParams,
    pub ic: InitialCondition,
    pub h: f64,
    pub method: Method,
    pub divergence_bound: f64,
    /// Simulated duration per cell; the step count is `round(t_end / h)`.
    pub t_end: f64,
    pub thresholds: ClassifierThresholds,
    pub max_cells: usize,
}

impl SweepSpec {
    pub fn new(params: LVParams, ic: InitialCondition, h: f64, method: Method, t_end: f64) -> Self {
        Self {
            axes: Vec::new(),
            params,
            ic,
            h,
            method,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
            t_end,
            thresholds: ClassifierThresholds::default(),
            max_cells: DEFAULT_MAX_CELLS,
        }
    }

    pub fn with_axis(mut self, axis: Axis) -> Self {
        self.axes.push(axis);
        self
    }

    pub fn cell_count(&self) -> u128 {
        self.axes.iter().map(|a| a.count as u128).product()
    }

    pub fn validate(&self) -> Result<usize, SweepError> {
        for (i, axis) in self.axes.iter().enumerate() {
            axis.validate()?;
            if self.axes[..i].iter().any(|a| a.param == axis.param) {
                return Err(SweepError::InvalidAxis {
                    axis: axis.param,
                    message: "swept more than once".into(),
                });
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(SweepError::InvalidSpec(format!("t_end = {}", self.t_end)));
        }
        self.thresholds
            .validate()
            .map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
        let cells = self.cell_count();
        if cells > self.max_cells as u128 {
            return Err(SweepError::GridTooLarge {
                cells,
                cap: self.max_cells,
            });
        }
        Ok(cells as usize)
    }

    /// Axis values of cell `index`, in axis order.
    pub fn coordinates(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        let mut coords = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            coords[k] = axis.value(rest % axis.count);
            rest /= axis.count;
        }
        coords
    }

    /// Fully resolved simulation inputs of cell `index`.
    pub fn cell_inputs(
        &self,
        index: usize,
    ) -> Result<(LVParams, InitialCondition, IntegrationConfig), SweepError> {
        let (mut r, mut a, mut b, mut m) = (
            self.params.r(),
            self.params.a(),
            self.params.b(),
            self.params.m(),
        );
        let (mut h0, mut p0, mut h) = (self.ic.h0(), self.ic.p0(), self.h);
        for (axis, v) in self.axes.iter().zip(self.coordinates(index)) {
            let slot = match axis.param {
                SweepParam::R => &mut r,
                SweepParam::A => &mut a,
                SweepParam::B => &mut b,
                SweepParam::M => &mut m,
                SweepParam::H => &mut h,
                SweepParam::H0 => &mut h0,
                SweepParam::P0 => &mut p0,
            };
            *slot = v;
        }
        let invalid = |message: String| SweepError::InvalidPoint { index, message };
        let params = LVParams::new(r, a, b, m).map_err(|e| invalid(e.to_string()))?;
        let ic = InitialCondition::new(self.ic.t0(), h0, p0).map_err(|e| invalid(e.to_string()))?;
        let n_steps = ((self.t_end / h).round() as usize).max(1);
        let cfg = IntegrationConfig::with_bound(h, n_steps, self.method, self.divergence_bound)
            .map_err(|e| invalid(e.to_string()))?;
        Ok((params, ic, cfg))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub index: usize,
    pub coordinates: Vec<f64>,
    pub label: Regime,
    pub best_r2: Option<f64>,
    pub peak_count: usize,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub params: Vec<SweepParam>,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn count(&self, label: Regime) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }
}

/// Simulates and classifies a single cell.
pub fn run_cell(spec: &SweepSpec, index: usize) -> Result<SweepRecord, SweepError> {
    let (params, ic, cfg) = spec.cell_inputs(index)?;
    let traj = simulate(&ic, &params, &cfg);
    let report = classify(&traj, &params, &spec.thresholds);
    Ok(SweepRecord {
        index,
        coordinates: spec.coordinates(index),
        label: report.label,
        best_r2: report.evidence.best_r_squared(),
        peak_count: report.evidence.h_peaks.count(),
        diverged: traj.terminated_early(),
    })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    let cells = spec.validate()?;
    let records = (0..cells)
        .into_par_iter()
        .map(|i| run_cell(spec, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        params: spec.axes.iter().map(|a| a.param).collect(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::equilibrium;

    fn fig2_spec() -> SweepSpec {
        SweepSpec::new(
            LVParams::new(0.2, 0.8, 1.03, 0.04).unwrap(),
            InitialCondition::new(0.0, 10.0, 2.0).unwrap(),
            0.25,
            Method::Euler,
            500.0,
        )
    }

    fn axis(param: SweepParam, min: f64, max: f64, count: usize, spacing: Spacing) -> Axis {
        Axis {
            param,
            min,
            max,
            count,
            spacing,
        }
    }

    #[test]
    fn axis_values() {
        let lin = axis(SweepParam::R, 0.0, 1.0, 5, Spacing::Linear);
        assert_eq!(lin.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let log = axis(SweepParam::A, 1e-3, 1e3, 7, Spacing::Log);
        let v = log.values();
        assert_eq!(v[0], 1e-3);
        assert_eq!(v[6], 1e3);
        assert!((v[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_validation() {
        assert!(axis(SweepParam::R, 0.0, 1.0, 1, Spacing::Linear)
            .validate()
            .is_err());
        assert!(axis(SweepParam::R, 1.0, 1.0, 3, Spacing::Linear)
            .validate()
            .is_err());
        assert!(axis(SweepParam::R, 0.0, 1.0, 3, Spacing::Log)
            .validate()
            .is_err());
        let dup = fig2_spec()
            .with_axis(axis(SweepParam::R, 0.1, 1.0, 2, Spacing::Linear))
            .with_axis(axis(SweepParam::R, 0.1, 1.0, 2, Spacing::Linear));
        assert!(matches!(
            dup.validate(),
            Err(SweepError::InvalidAxis { .. })
        ));
    }

    #[test]
    fn grid_cap() {
        let mut spec = fig2_spec()
            .with_axis(axis(SweepParam::R, 0.1, 1.0, 1000, Spacing::Linear))
            .with_axis(axis(SweepParam::A, 0.1, 1.0, 1000, Spacing::Linear));
        assert!(matches!(
            run_sweep(&spec),
            Err(SweepError::GridTooLarge {
                cells: 1_000_000,
                ..
            })
        ));
        spec.max_cells = 10;
        spec.axes = vec![axis(SweepParam::R, 0.1, 1.0, 11, Spacing::Linear)];
        assert!(matches!(
            spec.validate(),
            Err(SweepError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn row_major_coordinates() {
        let spec = fig2_spec()
            .with_axis(axis(SweepParam::R, 0.0, 1.0, 2, Spacing::Linear))
            .with_axis(axis(SweepParam::A, 10.0, 30.0, 3, Spacing::Linear));
        let coords: Vec<Vec<f64>> = (0..6).map(|i| spec.coordinates(i)).collect();
        assert_eq!(
            coords,
            vec![
                vec![0.0, 10.0],
                vec![0.0, 20.0],
                vec![0.0, 30.0],
                vec![1.0, 10.0],
                vec![1.0, 20.0],
                vec![1.0, 30.0]
            ]
        );
    }

    #[test]
    fn pinned_fig3_cell_is_near_linear() {
        let spec = SweepSpec::new(
            LVParams::new(1000.0, 1000.0, 100.0, 1e-5).unwrap(),
            InitialCondition::new(0.0, 1.0, 1.0).unwrap(),
            0.003,
            Method::Rk4,
            30.0,
        );
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.records.len(), 1);
        assert_eq!(result.records[0].label, Regime::NearLinear);
    }

    #[test]
    fn pinned_fig2_cell_matches_direct_run() {
        let spec = fig2_spec();
        let result = run_sweep(&spec).unwrap();
        let (params, ic, cfg) = spec.cell_inputs(0).unwrap();
        let direct = classify(&simulate(&ic, &params, &cfg), &params, &spec.thresholds);
        assert_eq!(result.records[0].label, direct.label);
        assert_eq!(result.records[0].diverged, direct.label == Regime::Diverged);
    }

    #[test]
    fn equilibrium_row_is_labelled() {
        let params = LVParams::new(0.2, 0.8, 1.03, 0.04).unwrap();
        let eq = equilibrium(&params).unwrap();
        let spec = SweepSpec::new(
            params,
            InitialCondition::new(0.0, 0.0, eq.p).unwrap(),
            0.25,
            Method::Rk4,
            50.0,
        )
        .with_axis(axis(SweepParam::H0, eq.h, 2.0 * eq.h, 2, Spacing::Linear))
        .with_axis(axis(SweepParam::H, 0.01, 0.1, 3, Spacing::Log));
        let result = run_sweep(&spec).unwrap();
        for rec in &result.records[..3] {
            assert_eq!(rec.coordinates[0], eq.h);
            assert_eq!(rec.label, Regime::Equilibrium);
        }
        assert!(result.records[3..]
            .iter()
            .all(|r| r.label != Regime::Equilibrium));
    }

    #[test]
    fn invalid_cell_is_reported() {
        let spec = fig2_spec().with_axis(axis(SweepParam::H0, -1.0, 1.0, 3, Spacing::Linear));
        assert!(matches!(
            run_sweep(&spec),
            Err(SweepError::InvalidPoint { index: 0, .. })
        ));
    }

    #[test]
    fn cell_order_does_not_matter() {
        let spec = fig2_spec()
            .with_axis(axis(SweepParam::R, 0.1, 0.3, 3, Spacing::Linear))
            .with_axis(axis(SweepParam::H, 0.01, 0.25, 4, Spacing::Log));
        let spec = SweepSpec {
            t_end: 40.0,
            ..spec
        };
        let forward = run_sweep(&spec).unwrap();
        let mut reversed: Vec<SweepRecord> =
            (0..12).rev().map(|i| run_cell(&spec, i).unwrap()).collect();
        reversed.sort_by_key(|r| r.index);
        assert_eq!(forward.records, reversed);
    }

    #[test]
    fn names_parse() {
        for p in SweepParam::ALL {
            assert_eq!(p.as_str().parse::<SweepParam>().unwrap(), p);
        }
        assert!("c".parse::<SweepParam>().is_err());
        assert_eq!("log".parse::<Spacing>().unwrap(), Spacing::Log);
    }
}
