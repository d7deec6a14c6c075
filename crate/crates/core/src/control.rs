//! PID baseline versus an LV-driven feedforward signal on a first-order
//! plant.
//!
//! The feedforward reading: in the stiff coefficient regime the predator
//! series `P(t)` rises quickly and then sits on a slowly drifting, almost
//! straight plateau. Scaled by a gain, that series is an open-loop soft-start
//! actuation signal. [`compare`] runs it next to a closed-loop PID on the
//! same plant and reports both metric sets side by side. No winner is picked.

use serde::Serialize;
use thiserror::Error;

use crate::analyze::fit::{fit_indices, trailing_range};
use crate::analyze::Series;
use crate::dynamics::{InitialCondition, LVParams};
use crate::integrate::{simulate, IntegrationConfig, Trajectory};

pub const DEFAULT_SETTLE_BAND: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("invalid PID parameters: {0}")]
    InvalidPid(String),
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
    #[error("invalid loop setup: {0}")]
    InvalidLoop(String),
    #[error("loop became non-finite at sample {sample} (y = {y}, u = {u})")]
    NonFiniteLoop { sample: usize, y: f64, u: f64 },
    #[error("LV signal generator diverged at step {step}")]
    Diverged { step: usize },
    #[error("plateau value is zero; gain is undefined")]
    ZeroPlateau,
    #[error("cannot measure the plateau: {0}")]
    Plateau(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PIDParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl PIDParams {
    pub fn new(kp: f64, ki: f64, kd: f64, u_min: f64, u_max: f64) -> Result<Self, ControlError> {
        for (name, v) in [("kp", kp), ("ki", ki), ("kd", kd)] {
            if !v.is_finite() {
                return Err(ControlError::InvalidPid(format!(
                    "{name} = {v} is not finite"
                )));
            }
        }
        if u_min.is_nan() || u_max.is_nan() || u_min >= u_max {
            return Err(ControlError::InvalidPid(format!(
                "u_min ({u_min}) must be below u_max ({u_max})"
            )));
        }
        Ok(Self {
            kp,
            ki,
            kd,
            u_min,
            u_max,
        })
    }
}

impl Default for PIDParams {
    fn default() -> Self {
        Self {
            kp: 1.0,
            ki: 0.5,
            kd: 0.0,
            u_min: -10.0,
            u_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PIDState {
    pub integral: f64,
    pub e_prev: f64,
}

/// One parallel-form PID update.
///
/// The rectangle-rule integral is accumulated before the output is formed.
/// When the unclamped output is saturated and the error would push the
/// integral term further into saturation, the integral keeps its previous
/// value (conditional integration).
pub fn pid_step(state: PIDState, e: f64, dt: f64, params: &PIDParams) -> (f64, PIDState) {
    debug_assert!(dt > 0.0);
    let derivative = params.kd * (e - state.e_prev) / dt;
    let raw = |integral: f64| params.kp * e + params.ki * integral + derivative;

    let mut integral = state.integral + e * dt;
    let mut u_raw = raw(integral);
    let push = params.ki * e;
    let winding_up = (u_raw > params.u_max && push > 0.0) || (u_raw < params.u_min && push < 0.0);
    if winding_up {
        integral = state.integral;
        u_raw = raw(integral);
    }
    let u = u_raw.clamp(params.u_min, params.u_max);
    (
        u,
        PIDState {
            integral,
            e_prev: e,
        },
    )
}

/// First-order plant `τ·ẏ = K·u − y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlantFO {
    pub gain: f64,
    pub tau: f64,
    pub y0: f64,
}

impl PlantFO {
    pub fn new(gain: f64, tau: f64, y0: f64) -> Result<Self, ControlError> {
        if !(gain.is_finite() && gain != 0.0) {
            return Err(ControlError::InvalidPlant(format!("gain K = {gain}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(ControlError::InvalidPlant(format!("tau = {tau}")));
        }
        if !y0.is_finite() {
            return Err(ControlError::InvalidPlant(format!("y0 = {y0}")));
        }
        Ok(Self { gain, tau, y0 })
    }
}

impl Default for PlantFO {
    fn default() -> Self {
        Self {
            gain: 2.0,
            tau: 1.0,
            y0: 0.0,
        }
    }
}

/// Exact zero-order-hold update over `dt`.
pub fn plant_step(y: f64, u: f64, dt: f64, plant: &PlantFO) -> f64 {
    let target = plant.gain * u;
    target + (y - target) * (-dt / plant.tau).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetpointProfile {
    Constant { value: f64 },
    Step { before: f64, after: f64, at: f64 },
}

impl SetpointProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            SetpointProfile::Constant { value } => value,
            SetpointProfile::Step { before, after, at } => {
                if t < at {
                    before
                } else {
                    after
                }
            }
        }
    }

    pub fn final_value(&self) -> f64 {
        match *self {
            SetpointProfile::Constant { value } => value,
            SetpointProfile::Step { after, .. } => after,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopMetrics {
    pub iae: f64,
    pub ise: f64,
    pub overshoot_pct: f64,
    /// First time after which the output stays inside the settling band;
    /// `None` when it never does.
    pub settling_time: Option<f64>,
    pub steady_state_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopResult {
    pub dt: f64,
    pub setpoint: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub metrics: LoopMetrics,
}

impl LoopResult {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn settled(&self) -> bool {
        self.metrics.settling_time.is_some()
    }
}

/// Rectangle-rule error integrals, overshoot and settling for sampled
/// `(setpoint, y)` pairs.
pub fn loop_metrics(
    setpoint: &[f64],
    y: &[f64],
    dt: f64,
    y0: f64,
    settle_band: f64,
) -> LoopMetrics {
    let n = y.len();
    let (mut iae, mut ise) = (0.0, 0.0);
    for (sp, yk) in setpoint.iter().zip(y) {
        let e = sp - yk;
        iae += e.abs() * dt;
        ise += e * e * dt;
    }
    let target = setpoint.last().copied().unwrap_or(0.0);
    let y_last = y.last().copied().unwrap_or(y0);

    let span = target - y0;
    let overshoot_pct = if span == 0.0 {
        0.0
    } else {
        let beyond = y
            .iter()
            .map(|&yk| (yk - target) * span.signum())
            .fold(0.0, f64::max);
        100.0 * beyond / span.abs()
    };

    let scale = if span != 0.0 {
        span.abs()
    } else {
        target.abs()
    };
    let band = settle_band * scale;
    let settling_time = match y.iter().rposition(|&yk| (yk - target).abs() > band) {
        None if n > 0 => Some(0.0),
        Some(k) if k + 1 < n => Some((k + 1) as f64 * dt),
        _ => None,
    };

    LoopMetrics {
        iae,
        ise,
        overshoot_pct,
        settling_time,
        steady_state_error: (target - y_last).abs(),
    }
}

fn sample_count(dt: f64, t_end: f64) -> Result<usize, ControlError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ControlError::InvalidLoop(format!("dt = {dt}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(ControlError::InvalidLoop(format!("t_end = {t_end}")));
    }
    Ok(((t_end / dt).round() as usize).max(1))
}

/// Closed loop: measure, PID, hold `u` for `dt`, repeat. Samples are taken
/// at `t_k = k·dt` before the plant advances.
pub fn run_pid_loop(
    plant: &PlantFO,
    pid: &PIDParams,
    setpoint: &SetpointProfile,
    dt: f64,
    t_end: f64,
) -> Result<LoopResult, ControlError> {
    let n = sample_count(dt, t_end)?;
    let (mut sp_log, mut y_log, mut u_log) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let mut state = PIDState::default();
    let mut y = plant.y0;
    for k in 0..n {
        let sp = setpoint.at(k as f64 * dt);
        let (u, next) = pid_step(state, sp - y, dt, pid);
        if !(y.is_finite() && u.is_finite()) {
            return Err(ControlError::NonFiniteLoop { sample: k, y, u });
        }
        state = next;
        sp_log.push(sp);
        y_log.push(y);
        u_log.push(u);
        y = plant_step(y, u, dt, plant);
    }
    let metrics = loop_metrics(&sp_log, &y_log, dt, plant.y0, DEFAULT_SETTLE_BAND);
    Ok(LoopResult {
        dt,
        setpoint: sp_log,
        y: y_log,
        u: u_log,
        metrics,
    })
}

/// Coefficients, start point and integration settings of the LV signal
/// generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LvSetup {
    pub params: LVParams,
    pub ic: InitialCondition,
    pub config: IntegrationConfig,
}

/// LV predator series scaled by a gain, sampled on the integrator grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedforwardSignal {
    pub t0: f64,
    pub h: f64,
    pub gain: f64,
    pub values: Vec<f64>,
}

impl FeedforwardSignal {
    /// Zero-order-hold lookup; holds the end values outside the grid.
    pub fn at(&self, t: f64) -> f64 {
        let k = ((t - self.t0) / self.h).floor();
        if k <= 0.0 {
            self.values[0]
        } else {
            let k = (k as usize).min(self.values.len() - 1);
            self.values[k]
        }
    }
}

fn lv_run(setup: &LvSetup) -> Result<Trajectory, ControlError> {
    let traj = simulate(&setup.ic, &setup.params, &setup.config);
    match traj.early_stop() {
        Some(stop) => Err(ControlError::Diverged { step: stop.step }),
        None => Ok(traj),
    }
}

/// `u(t) = g·P(t)` from a fresh LV run.
pub fn lv_feedforward_signal(
    setup: &LvSetup,
    gain: f64,
) -> Result<FeedforwardSignal, ControlError> {
    let traj = lv_run(setup)?;
    Ok(signal_from(&traj, gain))
}

fn signal_from(traj: &Trajectory, gain: f64) -> FeedforwardSignal {
    FeedforwardSignal {
        t0: traj.t0(),
        h: traj.h(),
        gain,
        values: traj.states().iter().map(|s| gain * s.p).collect(),
    }
}

/// Plateau of `P`: the final-window line fit evaluated at the window centre.
pub fn measure_plateau(traj: &Trajectory, final_frac: f64) -> Result<f64, ControlError> {
    fit_indices(traj, Series::P, trailing_range(traj.len(), final_frac))
        .map(|f| f.midpoint_value())
        .map_err(|e| ControlError::Plateau(e.to_string()))
}

/// Gain that makes the plant's DC response to the plateau equal the
/// setpoint: `g = setpoint / (K·p_plateau)`.
pub fn calibrate_gain(plant: &PlantFO, setpoint: f64, p_plateau: f64) -> Result<f64, ControlError> {
    if p_plateau == 0.0 {
        return Err(ControlError::ZeroPlateau);
    }
    Ok(setpoint / (plant.gain * p_plateau))
}

/// Drives the plant open-loop with `signal`.
pub fn run_open_loop(
    plant: &PlantFO,
    signal: &FeedforwardSignal,
    setpoint: &SetpointProfile,
    dt: f64,
    t_end: f64,
) -> Result<LoopResult, ControlError> {
    let n = sample_count(dt, t_end)?;
    let (mut sp_log, mut y_log, mut u_log) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let mut y = plant.y0;
    for k in 0..n {
        let t = k as f64 * dt;
        let u = signal.at(signal.t0 + t);
        if !(y.is_finite() && u.is_finite()) {
            return Err(ControlError::NonFiniteLoop { sample: k, y, u });
        }
        sp_log.push(setpoint.at(t));
        y_log.push(y);
        u_log.push(u);
        y = plant_step(y, u, dt, plant);
    }
    let metrics = loop_metrics(&sp_log, &y_log, dt, plant.y0, DEFAULT_SETTLE_BAND);
    Ok(LoopResult {
        dt,
        setpoint: sp_log,
        y: y_log,
        u: u_log,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub metric: &'static str,
    pub pid: Option<f64>,
    pub lv: Option<f64>,
}

/// Both sides of a comparison. Either side may fail on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub pid: Result<LoopResult, ControlError>,
    pub lv: Result<LoopResult, ControlError>,
    pub lv_gain: Option<f64>,
    pub lv_plateau: Option<f64>,
}

impl Comparison {
    /// Side-by-side metric table. Missing values mean the side failed or
    /// the metric is undefined (never settled).
    pub fn table(&self) -> Vec<MetricRow> {
        type MetricFn = fn(&LoopMetrics) -> Option<f64>;
        let pick = |side: &Result<LoopResult, ControlError>, f: MetricFn| {
            side.as_ref().ok().and_then(|r| f(&r.metrics))
        };
        let rows: [(&'static str, MetricFn); 5] = [
            ("iae", |m| Some(m.iae)),
            ("ise", |m| Some(m.ise)),
            ("overshoot_pct", |m| Some(m.overshoot_pct)),
            ("settling_time", |m| m.settling_time),
            ("steady_state_error", |m| Some(m.steady_state_error)),
        ];
        rows.into_iter()
            .map(|(metric, f)| MetricRow {
                metric,
                pid: pick(&self.pid, f),
                lv: pick(&self.lv, f),
            })
            .collect()
    }
}

/// Runs the PID loop and the calibrated LV feedforward drive on the same
/// plant, setpoint and sampling.
pub fn compare(
    plant: &PlantFO,
    pid: &PIDParams,
    lv: &LvSetup,
    setpoint: &SetpointProfile,
    dt: f64,
    t_end: f64,
    final_frac: f64,
) -> Comparison {
    let pid_side = run_pid_loop(plant, pid, setpoint, dt, t_end);

    let mut lv_gain = None;
    let mut lv_plateau = None;
    let lv_side = lv_run(lv).and_then(|traj| {
        let plateau = measure_plateau(&traj, final_frac)?;
        lv_plateau = Some(plateau);
        let gain = calibrate_gain(plant, setpoint.final_value(), plateau)?;
        lv_gain = Some(gain);
        run_open_loop(plant, &signal_from(&traj, gain), setpoint, dt, t_end)
    });

    Comparison {
        pid: pid_side,
        lv: lv_side,
        lv_gain,
        lv_plateau,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::Method;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unbounded(kp: f64, ki: f64, kd: f64) -> PIDParams {
        PIDParams::new(kp, ki, kd, f64::NEG_INFINITY, f64::INFINITY).unwrap()
    }

    fn fig3_setup(h: f64, n: usize) -> LvSetup {
        LvSetup {
            params: LVParams::new(1000.0, 1000.0, 100.0, 1e-5).unwrap(),
            ic: InitialCondition::new(0.0, 1.0, 1.0).unwrap(),
            config: IntegrationConfig::new(h, n, Method::Rk4).unwrap(),
        }
    }

    const UNIT: SetpointProfile = SetpointProfile::Constant { value: 1.0 };

    #[test]
    fn pid_validation() {
        assert!(PIDParams::new(f64::NAN, 0.0, 0.0, -1.0, 1.0).is_err());
        assert!(PIDParams::new(1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(PlantFO::new(0.0, 1.0, 0.0).is_err());
        assert!(PlantFO::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn proportional_only() {
        let (u, _) = pid_step(PIDState::default(), 0.5, 0.1, &unbounded(2.0, 0.0, 0.0));
        assert_eq!(u, 1.0);
    }

    #[test]
    fn integral_accumulates_before_output() {
        let pid = unbounded(0.0, 1.0, 0.0);
        let mut state = PIDState::default();
        let mut u = 0.0;
        for _ in 0..3 {
            (u, state) = pid_step(state, 1.0, 0.1, &pid);
        }
        assert_relative_eq!(u, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn zero_error_gives_zero_output() {
        let pid = PIDParams::default();
        let mut state = PIDState::default();
        for _ in 0..100 {
            let (u, next) = pid_step(state, 0.0, 0.01, &pid);
            assert_eq!(u, 0.0);
            state = next;
        }
    }

    #[test]
    fn anti_windup_freezes_integral_in_saturation() {
        let pid = PIDParams::new(0.0, 10.0, 0.0, -1.0, 1.0).unwrap();
        let mut state = PIDState::default();
        for _ in 0..100 {
            let (u, next) = pid_step(state, 1.0, 0.1, &pid);
            assert!(u <= 1.0);
            state = next;
        }
        // integral stops once 10·I would exceed u_max
        assert!(state.integral <= 0.1 + 1e-12, "integral {}", state.integral);
        // an opposing error unwinds immediately
        let (u, _) = pid_step(state, -1.0, 0.1, &pid);
        assert!(u < 1.0);
    }

    #[test]
    fn plant_steady_state_and_step() {
        let plant = PlantFO::new(2.0, 1.0, 0.0).unwrap();
        assert_eq!(plant_step(2.0, 1.0, 0.3, &plant), 2.0);
        // 2·(1 − e⁻¹)
        assert_relative_eq!(
            plant_step(0.0, 1.0, 1.0, &plant),
            2.0 * (1.0 - (-1.0f64).exp()),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            plant_step(0.0, 1.0, 1.0, &plant),
            1.264_241_117_657_115,
            epsilon = 1e-12
        );
        assert!(plant_step(5.0, 0.0, 1e3, &plant).abs() < 1e-300);
    }

    #[test]
    fn zero_gains_let_output_decay() {
        let plant = PlantFO::new(2.0, 1.0, 3.0).unwrap();
        let r = run_pid_loop(&plant, &unbounded(0.0, 0.0, 0.0), &UNIT, 0.01, 20.0).unwrap();
        assert!(r.u.iter().all(|&u| u == 0.0));
        assert!(r.y.windows(2).all(|w| w[1] < w[0]));
        let plant0 = PlantFO::default();
        let r0 = run_pid_loop(&plant0, &unbounded(0.0, 0.0, 0.0), &UNIT, 0.01, 20.0).unwrap();
        assert_eq!(r0.metrics.steady_state_error, 1.0);
        assert_eq!(r0.metrics.settling_time, None);
    }

    #[test]
    fn default_pid_settles_on_unit_step() {
        let r = run_pid_loop(
            &PlantFO::default(),
            &PIDParams::default(),
            &UNIT,
            0.01,
            20.0,
        )
        .unwrap();
        assert_eq!(r.len(), 2000);
        let m = r.metrics;
        assert!(m.settling_time.is_some());
        assert!(m.steady_state_error < 1e-3, "sse {}", m.steady_state_error);
        assert!(m.iae > 0.0 && m.ise > 0.0);
    }

    #[test]
    fn unstable_gains_are_flagged() {
        let pid = unbounded(1e6, 0.0, 0.0);
        let res = run_pid_loop(&PlantFO::default(), &pid, &UNIT, 0.5, 400.0);
        assert!(matches!(res, Err(ControlError::NonFiniteLoop { .. })));
        // with saturation the loop stays finite but chatters without settling
        let bounded = PIDParams::new(1e6, 0.0, 0.0, -10.0, 10.0).unwrap();
        let r = run_pid_loop(&PlantFO::default(), &bounded, &UNIT, 0.5, 50.0).unwrap();
        assert!(!r.settled());
    }

    #[test]
    fn feedforward_gain_scaling() {
        let setup = fig3_setup(0.003, 1000);
        let zero = lv_feedforward_signal(&setup, 0.0).unwrap();
        assert!(zero.values.iter().all(|&u| u == 0.0));
        let one = lv_feedforward_signal(&setup, 1.0).unwrap();
        let traj = simulate(&setup.ic, &setup.params, &setup.config);
        assert!(one.values.iter().zip(traj.states()).all(|(u, s)| *u == s.p));
    }

    #[test]
    fn feedforward_lookup_holds_values() {
        let sig = FeedforwardSignal {
            t0: 0.0,
            h: 0.5,
            gain: 1.0,
            values: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(sig.at(-1.0), 1.0);
        assert_eq!(sig.at(0.49), 1.0);
        assert_eq!(sig.at(0.5), 2.0);
        assert_eq!(sig.at(100.0), 3.0);
    }

    #[test]
    fn diverging_generator_is_reported() {
        let setup = fig3_setup(0.1, 100);
        let setup = LvSetup {
            config: setup.config.with_method(Method::Euler),
            ..setup
        };
        assert!(matches!(
            lv_feedforward_signal(&setup, 1.0),
            Err(ControlError::Diverged { .. })
        ));
    }

    #[test]
    fn gain_calibration() {
        let unit = PlantFO::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(calibrate_gain(&unit, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(calibrate_gain(&PlantFO::default(), 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(
            calibrate_gain(&unit, 1.0, 0.0),
            Err(ControlError::ZeroPlateau)
        );
    }

    #[test]
    fn measured_plateau_is_reproducible() {
        let setup = fig3_setup(0.003, 10_000);
        let a = measure_plateau(&simulate(&setup.ic, &setup.params, &setup.config), 0.5).unwrap();
        let b = measure_plateau(&simulate(&setup.ic, &setup.params, &setup.config), 0.5).unwrap();
        assert_eq!(a, b);
        // V = 1100 at (1, 1); with H ≈ 0 the plateau solves P − ln P ≈ 1.1
        assert!((a - ln_root(1.1)).abs() < 1e-2, "plateau {a}");
    }

    /// Root above 1 of `x − ln x = c`, by bisection.
    fn ln_root(c: f64) -> f64 {
        let (mut lo, mut hi) = (1.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - mid.ln() < c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn calibrated_feedforward_reaches_setpoint() {
        let cmp = compare(
            &PlantFO::default(),
            &PIDParams::default(),
            &fig3_setup(0.003, 10_000),
            &UNIT,
            0.01,
            20.0,
            0.5,
        );
        let lv = cmp.lv.as_ref().unwrap();
        let y_end = *lv.y.last().unwrap();
        assert!((y_end - 1.0).abs() < 0.02, "y_end {y_end}");
        let table = cmp.table();
        assert_eq!(table.len(), 5);
        assert!(table
            .iter()
            .filter(|r| r.metric != "settling_time")
            .all(|r| r.pid.is_some() && r.lv.is_some()));
    }

    #[test]
    fn zero_setpoint_settles_trivially() {
        let zero = SetpointProfile::Constant { value: 0.0 };
        let cmp = compare(
            &PlantFO::default(),
            &PIDParams::default(),
            &fig3_setup(0.003, 10_000),
            &zero,
            0.01,
            5.0,
            0.5,
        );
        for side in [&cmp.pid, &cmp.lv] {
            let m = side.as_ref().unwrap().metrics;
            assert_eq!(m.iae, 0.0);
            assert_eq!(m.steady_state_error, 0.0);
            assert_eq!(m.settling_time, Some(0.0));
        }
    }

    #[test]
    fn diverged_lv_side_keeps_pid_side() {
        let setup = fig3_setup(0.1, 100);
        let setup = LvSetup {
            config: setup.config.with_method(Method::Euler),
            ..setup
        };
        let cmp = compare(
            &PlantFO::default(),
            &PIDParams::default(),
            &setup,
            &UNIT,
            0.01,
            20.0,
            0.5,
        );
        assert!(cmp.pid.is_ok());
        assert!(matches!(cmp.lv, Err(ControlError::Diverged { .. })));
        assert!(cmp.table().iter().all(|r| r.lv.is_none()));
    }

    #[test]
    fn step_profile() {
        let p = SetpointProfile::Step {
            before: 0.0,
            after: 2.0,
            at: 1.0,
        };
        assert_eq!((p.at(0.5), p.at(1.0), p.final_value()), (0.0, 2.0, 2.0));
    }

    proptest! {
        #[test]
        fn two_half_steps_equal_one_step(
            y in -10.0..10.0f64, u in -10.0..10.0f64, dt in 1e-3..5.0f64,
            k in 0.1..5.0f64, tau in 0.1..10.0f64
        ) {
            let plant = PlantFO::new(k, tau, 0.0).unwrap();
            let one = plant_step(y, u, dt, &plant);
            let two = plant_step(plant_step(y, u, dt / 2.0, &plant), u, dt / 2.0, &plant);
            prop_assert!((one - two).abs() <= 1e-12 * one.abs().max(1.0));
        }

        #[test]
        fn output_respects_saturation(
            e in -1e3..1e3f64, integral in -1e3..1e3f64, e_prev in -1e3..1e3f64,
            kp in -10.0..10.0f64, ki in -10.0..10.0f64, kd in -10.0..10.0f64,
            lo in -5.0..0.0f64, width in 0.1..10.0f64
        ) {
            let pid = PIDParams::new(kp, ki, kd, lo, lo + width).unwrap();
            let (u, _) = pid_step(PIDState { integral, e_prev }, e, 0.05, &pid);
            prop_assert!(u >= lo && u <= lo + width);
        }

        #[test]
        fn no_derivative_means_no_memory_of_last_error(
            e in -1e3..1e3f64, integral in -1e3..1e3f64,
            a in -1e3..1e3f64, b in -1e3..1e3f64
        ) {
            let pid = PIDParams::new(1.3, 0.7, 0.0, -50.0, 50.0).unwrap();
            let (ua, sa) = pid_step(PIDState { integral, e_prev: a }, e, 0.1, &pid);
            let (ub, sb) = pid_step(PIDState { integral, e_prev: b }, e, 0.1, &pid);
            prop_assert_eq!(ua, ub);
            prop_assert_eq!(sa.integral, sb.integral);
        }

        #[test]
        fn metric_sanity(
            ys in prop::collection::vec(-5.0..5.0f64, 1..200), sp in -2.0..2.0f64
        ) {
            let setpoint = vec![sp; ys.len()];
            let m = loop_metrics(&setpoint, &ys, 0.1, 0.0, 0.02);
            let max_e = ys.iter().map(|y| (sp - y).abs()).fold(0.0, f64::max);
            prop_assert!(m.iae >= 0.0 && m.ise >= 0.0);
            prop_assert!(m.ise <= max_e * m.iae * (1.0 + 1e-12));
            if sp > 0.0 && ys.iter().all(|&y| y <= sp) {
                prop_assert_eq!(m.overshoot_pct, 0.0);
            }
        }
    }
}
