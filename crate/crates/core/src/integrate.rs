//! Fixed-step integration: explicit Euler, Heun (improved Euler,
//! predictor–corrector) and classical fourth-order Runge-Kutta.
//!
//! Runs never adapt the step. Blow-up is a recorded outcome of
//! [`simulate`], not an error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{rhs, InitialCondition, LVParams, State};

pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e12;

/// Initial step count used by [`reference_trajectory`]; doubled on every
/// refinement.
const REFERENCE_START_STEPS: usize = 1000;
const REFERENCE_TOLERANCE: f64 = 1e-10;
const REFERENCE_MIN_STEP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("non-finite state after step from ({h}, {p})")]
    NonFiniteState { h: f64, p: f64 },
    #[error("invalid integration config: {0}")]
    InvalidConfig(String),
    #[error("reference integration did not converge before the step reached {step:e} (last change {last_change:e})")]
    NoConvergence { step: f64, last_change: f64 },
    #[error("unknown integration method `{0}` (expected euler, heun or rk4)")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    /// Improved Euler: Euler predictor, trapezoidal corrector.
    Heun,
    Rk4,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Euler, Method::Heun, Method::Rk4];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Heun => "heun",
            Method::Rk4 => "rk4",
        }
    }

    /// Global order of accuracy.
    pub fn order(&self) -> u32 {
        match self {
            Method::Euler => 1,
            Method::Heun => 2,
            Method::Rk4 => 4,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = IntegrateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" => Ok(Method::Euler),
            "heun" | "euler2" | "euler-ii" => Ok(Method::Heun),
            "rk4" => Ok(Method::Rk4),
            _ => Err(IntegrateError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationConfig {
    h: f64,
    n_steps: usize,
    method: Method,
    divergence_bound: f64,
}

impl IntegrationConfig {
    pub fn new(h: f64, n_steps: usize, method: Method) -> Result<Self, IntegrateError> {
        Self::with_bound(h, n_steps, method, DEFAULT_DIVERGENCE_BOUND)
    }

    pub fn with_bound(
        h: f64,
        n_steps: usize,
        method: Method,
        divergence_bound: f64,
    ) -> Result<Self, IntegrateError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(IntegrateError::InvalidConfig(format!(
                "step size h must be positive and finite, got {h}"
            )));
        }
        if n_steps == 0 {
            return Err(IntegrateError::InvalidConfig(
                "n_steps must be at least 1".into(),
            ));
        }
        if divergence_bound.is_nan() || divergence_bound <= 0.0 {
            return Err(IntegrateError::InvalidConfig(format!(
                "divergence_bound must be positive, got {divergence_bound}"
            )));
        }
        Ok(Self {
            h,
            n_steps,
            method,
            divergence_bound,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn divergence_bound(&self) -> f64 {
        self.divergence_bound
    }

    pub fn t_span(&self) -> f64 {
        self.h * self.n_steps as f64
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_steps(self, n_steps: usize) -> Result<Self, IntegrateError> {
        Self::with_bound(self.h, n_steps, self.method, self.divergence_bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    /// |H| or |P| exceeded the divergence bound.
    BoundExceeded,
    /// A stage produced NaN or infinity.
    NonFinite,
}

/// Why and where a run was cut short. `step` is the index of the state that
/// would have been produced; the trajectory holds indices `0..step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EarlyStop {
    pub step: usize,
    pub cause: StopCause,
}

/// Densely sampled run. Sample `i` lies at `t0 + i·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    h: f64,
    states: Vec<State>,
    early_stop: Option<EarlyStop>,
}

impl Trajectory {
    /// Assembles a trajectory from raw parts. `states` must be non-empty.
    pub fn from_parts(t0: f64, h: f64, states: Vec<State>, early_stop: Option<EarlyStop>) -> Self {
        assert!(
            !states.is_empty(),
            "a trajectory holds at least its initial state"
        );
        Self {
            t0,
            h,
            states,
            early_stop,
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|i| self.time(i))
    }

    pub fn first(&self) -> State {
        self.states[0]
    }

    pub fn last(&self) -> State {
        *self.states.last().expect("non-empty trajectory")
    }

    pub fn early_stop(&self) -> Option<EarlyStop> {
        self.early_stop
    }

    pub fn terminated_early(&self) -> bool {
        self.early_stop.is_some()
    }

    pub fn has_negative_population(&self) -> bool {
        self.states.iter().any(|s| s.h < 0.0 || s.p < 0.0)
    }
}

#[inline]
fn axpy(s: State, k: f64, dh: f64, dp: f64) -> State {
    State {
        h: s.h + k * dh,
        p: s.p + k * dp,
    }
}

/// Advances one step of size `h`.
pub fn step(s: State, params: &LVParams, h: f64, method: Method) -> Result<State, IntegrateError> {
    let k1 = rhs(s, params);
    let next = match method {
        Method::Euler => axpy(s, h, k1.dh, k1.dp),
        Method::Heun => {
            let predictor = axpy(s, h, k1.dh, k1.dp);
            check_finite(s, predictor)?;
            let k2 = rhs(predictor, params);
            axpy(s, h / 2.0, k1.dh + k2.dh, k1.dp + k2.dp)
        }
        Method::Rk4 => {
            let half = h / 2.0;
            let s2 = axpy(s, half, k1.dh, k1.dp);
            let k2 = rhs(s2, params);
            let s3 = axpy(s, half, k2.dh, k2.dp);
            let k3 = rhs(s3, params);
            let s4 = axpy(s, h, k3.dh, k3.dp);
            let k4 = rhs(s4, params);
            check_finite(s, s4)?;
            axpy(
                s,
                h / 6.0,
                k1.dh + 2.0 * k2.dh + 2.0 * k3.dh + k4.dh,
                k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp,
            )
        }
    };
    check_finite(s, next)?;
    Ok(next)
}

fn check_finite(from: State, s: State) -> Result<(), IntegrateError> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(IntegrateError::NonFiniteState {
            h: from.h,
            p: from.p,
        })
    }
}

/// Runs `cfg.n_steps()` steps from `ic`, stopping early if the state leaves
/// the divergence bound or stops being finite.
pub fn simulate(ic: &InitialCondition, params: &LVParams, cfg: &IntegrationConfig) -> Trajectory {
    let mut states = Vec::with_capacity(cfg.n_steps + 1);
    let mut s = ic.state();
    states.push(s);
    let mut early_stop = None;
    for i in 1..=cfg.n_steps {
        match step(s, params, cfg.h, cfg.method) {
            Ok(next) if next.max_abs() <= cfg.divergence_bound => {
                s = next;
                states.push(s);
            }
            Ok(_) => {
                early_stop = Some(EarlyStop {
                    step: i,
                    cause: StopCause::BoundExceeded,
                });
                break;
            }
            Err(_) => {
                early_stop = Some(EarlyStop {
                    step: i,
                    cause: StopCause::NonFinite,
                });
                break;
            }
        }
    }
    Trajectory {
        t0: ic.t0(),
        h: cfg.h,
        states,
        early_stop,
    }
}

/// Endpoint of an RK4 run with `n` steps over `[t0, t_end]`, without storing
/// the intermediate states.
fn rk4_endpoint(ic: &InitialCondition, params: &LVParams, h: f64, n: usize) -> Option<State> {
    let mut s = ic.state();
    for _ in 0..n {
        s = step(s, params, h, Method::Rk4).ok()?;
    }
    Some(s)
}

/// High-accuracy RK4 run: the step count is doubled until successive
/// endpoints agree to `1e-10` in max-norm. Returns the finer of the last two
/// runs.
pub fn reference_trajectory(
    ic: &InitialCondition,
    params: &LVParams,
    t_end: f64,
) -> Result<Trajectory, IntegrateError> {
    let span = t_end - ic.t0();
    if !(span > 0.0 && span.is_finite()) {
        return Err(IntegrateError::InvalidConfig(format!(
            "t_end ({t_end}) must be after t0 ({})",
            ic.t0()
        )));
    }
    let mut n = REFERENCE_START_STEPS;
    let mut prev = rk4_endpoint(ic, params, span / n as f64, n);
    let mut last_change = f64::INFINITY;
    loop {
        n *= 2;
        let h = span / n as f64;
        if h < REFERENCE_MIN_STEP {
            return Err(IntegrateError::NoConvergence {
                step: h,
                last_change,
            });
        }
        let cur = rk4_endpoint(ic, params, h, n);
        if let (Some(a), Some(b)) = (prev, cur) {
            last_change = a.distance(&b);
            if last_change < REFERENCE_TOLERANCE {
                let cfg = IntegrationConfig::with_bound(h, n, Method::Rk4, f64::MAX)?;
                return Ok(simulate(ic, params, &cfg));
            }
        }
        prev = cur;
    }
}
