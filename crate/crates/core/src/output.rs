//! File formats.
//!
//! **Trajectory CSV**: header `t,H,P`, one row per stored sample, floats in
//! `{:.16e}` scientific notation (17 significant digits, so re-reading gives
//! back the same `f64` bits).
//!
//! **Sweep CSV**: one row per cell in row-major order. The columns are the
//! swept parameter names in axis order, then `label,best_r2,peak_count,diverged`.
//! `best_r2` is empty when no final-window fit exists.
//!
//! **Report JSON**, one document per run:
//!
//! | field              | type                         |
//! |--------------------|------------------------------|
//! | `scenario`         | string                       |
//! | `method`           | `"euler"`, `"heun"` or `"rk4"` |
//! | `label`            | regime name or `null`        |
//! | `fits`             | `[{window, series, slope, intercept, r_squared, max_abs_residual, t_start, t_end, n_samples}]` |
//! | `peaks`            | `[{series, index, time, value, prominence}]` |
//! | `metrics`          | object of number-or-null     |
//! | `terminated_early` | bool                         |
//! | `version`          | crate version string         |
//!
//! Non-finite metric values are written as `null`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyze::{conserved_drift, LinearFit, Peak, Regime, RegimeReport, Series};
use crate::control::Comparison;
use crate::dynamics::LVParams;
use crate::integrate::{Method, Trajectory};
use crate::sweep::SweepResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<TrajectoryRow> {
    traj.times()
        .zip(traj.states())
        .map(|(t, s)| TrajectoryRow { t, h: s.h, p: s.p })
        .collect()
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "H", "P"])?;
    for row in trajectory_rows(traj) {
        w.write_record([sci(row.t), sci(row.h), sci(row.p)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRow>, OutputError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "H", "P"] {
        return Err(OutputError::Malformed {
            row: 0,
            message: format!(
                "expected header t,H,P, got {}",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(OutputError::from))
        .collect()
}

pub fn write_sweep_csv<W: Write>(out: W, result: &SweepResult) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = result.params.iter().map(|p| p.as_str()).collect();
    header.extend(["label", "best_r2", "peak_count", "diverged"]);
    w.write_record(&header)?;
    for rec in &result.records {
        let mut row: Vec<String> = rec.coordinates.iter().map(|c| format!("{c:?}")).collect();
        row.push(rec.label.as_str().to_string());
        row.push(rec.best_r2.map(|r| format!("{r:?}")).unwrap_or_default());
        row.push(rec.peak_count.to_string());
        row.push(rec.diverged.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub window: String,
    pub series: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_abs_residual: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
}

impl FitEntry {
    fn new(window: &str, series: Series, fit: &LinearFit) -> Self {
        Self {
            window: window.to_string(),
            series: series_name(series).to_string(),
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            max_abs_residual: fit.max_abs_residual,
            t_start: fit.window.0,
            t_end: fit.window.1,
            n_samples: fit.n_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakEntry {
    pub series: String,
    pub index: usize,
    pub time: f64,
    pub value: f64,
    pub prominence: f64,
}

impl From<&Peak> for PeakEntry {
    fn from(p: &Peak) -> Self {
        Self {
            series: series_name(p.series).to_string(),
            index: p.index,
            time: p.time,
            value: p.value,
            prominence: p.prominence,
        }
    }
}

fn series_name(s: Series) -> &'static str {
    match s {
        Series::H => "H",
        Series::P => "P",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub method: Method,
    pub label: Option<Regime>,
    pub fits: Vec<FitEntry>,
    pub peaks: Vec<PeakEntry>,
    pub metrics: BTreeMap<String, Option<f64>>,
    pub terminated_early: bool,
    pub version: String,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Report {
    fn empty(scenario: &str, method: Method) -> Self {
        Self {
            scenario: scenario.to_string(),
            method,
            label: None,
            fits: Vec::new(),
            peaks: Vec::new(),
            metrics: BTreeMap::new(),
            terminated_early: false,
            version: VERSION.to_string(),
        }
    }

    fn metric(&mut self, key: &str, value: Option<f64>) {
        self.metrics.insert(key.to_string(), value.and_then(finite));
    }

    /// Run summary without classification.
    pub fn simulation(
        scenario: &str,
        method: Method,
        traj: &Trajectory,
        params: &LVParams,
    ) -> Self {
        let mut r = Self::empty(scenario, method);
        r.terminated_early = traj.terminated_early();
        let last = traj.last();
        r.metric("samples", Some(traj.len() as f64));
        r.metric("h", Some(traj.h()));
        r.metric("t_end", Some(traj.time(traj.len() - 1)));
        r.metric("final_h", Some(last.h));
        r.metric("final_p", Some(last.p));
        r.metric("conserved_drift", conserved_drift(traj, params));
        r.metric("early_stop_step", traj.early_stop().map(|e| e.step as f64));
        r
    }

    pub fn analysis(
        scenario: &str,
        method: Method,
        traj: &Trajectory,
        params: &LVParams,
        report: &RegimeReport,
    ) -> Self {
        let mut r = Self::simulation(scenario, method, traj, params);
        let ev = &report.evidence;
        r.label = Some(report.label);
        r.fits = ev
            .fits()
            .iter()
            .map(|(w, s, f)| FitEntry::new(w, *s, f))
            .collect();
        r.peaks = ev
            .h_peaks
            .peaks
            .iter()
            .chain(&ev.p_peaks.peaks)
            .map(PeakEntry::from)
            .collect();
        r.metric("best_r2", ev.best_r_squared());
        r.metric("equilibrium_deviation", ev.equilibrium_deviation);
        r.metric("final_quarter_max_h", Some(ev.final_quarter_max_h));
        r.metric("h_peak_count", Some(ev.h_peaks.count() as f64));
        r.metric("p_peak_count", Some(ev.p_peaks.count() as f64));
        r
    }

    /// Metrics are `pid.<name>` and `lv.<name>`, plus the feedforward
    /// calibration (`lv.gain`, `lv.plateau`).
    pub fn comparison(scenario: &str, method: Method, cmp: &Comparison) -> Self {
        let mut r = Self::empty(scenario, method);
        for row in cmp.table() {
            r.metric(&format!("pid.{}", row.metric), row.pid);
            r.metric(&format!("lv.{}", row.metric), row.lv);
        }
        r.metric("lv.gain", cmp.lv_gain);
        r.metric("lv.plateau", cmp.lv_plateau);
        r.terminated_early = cmp.lv.is_err() || cmp.pid.is_err();
        r
    }

    /// Label counts as `cells.<LABEL>`.
    pub fn sweep(scenario: &str, method: Method, result: &SweepResult) -> Self {
        let mut r = Self::empty(scenario, method);
        r.metric("cells", Some(result.records.len() as f64));
        for label in Regime::ALL {
            r.metric(&format!("cells.{label}"), Some(result.count(label) as f64));
        }
        r.terminated_early = result.records.iter().any(|c| c.diverged);
        r
    }

    pub fn to_json(&self) -> Result<String, OutputError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
