//! Empirical convergence order of the fixed-step schemes.

use serde::Serialize;

use super::fit::fit_samples;
use super::AnalyzeError;
use crate::dynamics::{InitialCondition, LVParams};
use crate::integrate::{reference_trajectory, simulate, IntegrationConfig, Method};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub method: Method,
    /// Slope of log(error) against log(h).
    pub order: f64,
    /// `(h, max-norm endpoint error)` per step size.
    pub errors: Vec<(f64, f64)>,
}

/// Measures endpoint errors against [`reference_trajectory`] for each step
/// in `h_list` and fits the log-log slope. Each step must divide
/// `t_end − t0` into a whole number of steps.
pub fn estimate_order(
    method: Method,
    ic: &InitialCondition,
    params: &LVParams,
    t_end: f64,
    h_list: &[f64],
) -> Result<OrderEstimate, AnalyzeError> {
    let mut distinct: Vec<f64> = h_list.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(AnalyzeError::InvalidSteps(format!(
            "need at least 3 distinct step sizes, got {}",
            distinct.len()
        )));
    }
    let span = t_end - ic.t0();
    let reference = reference_trajectory(ic, params, t_end)?.last();

    let mut errors = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let steps = span / h;
        let n = steps.round();
        if !(n >= 1.0 && (steps - n).abs() <= 1e-9 * n) {
            return Err(AnalyzeError::InvalidSteps(format!(
                "h = {h} does not divide the span {span}"
            )));
        }
        let cfg = IntegrationConfig::new(h, n as usize, method)?;
        let traj = simulate(ic, params, &cfg);
        if traj.terminated_early() {
            return Err(AnalyzeError::UnstableStep { h });
        }
        let err = traj.last().distance(&reference);
        if err.is_nan() || err <= 0.0 {
            return Err(AnalyzeError::InvalidSteps(format!(
                "zero endpoint error at h = {h}; order is undefined"
            )));
        }
        errors.push((h, err));
    }

    let log_h: Vec<f64> = errors.iter().map(|(h, _)| h.ln()).collect();
    let log_e: Vec<f64> = errors.iter().map(|(_, e)| e.ln()).collect();
    let fit = fit_samples(&log_h, &log_e)?;
    Ok(OrderEstimate {
        method,
        order: fit.slope,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> LVParams {
        LVParams::new(0.2, 0.8, 1.03, 0.04).unwrap()
    }

    fn ic() -> InitialCondition {
        InitialCondition::new(0.0, 10.0, 2.0).unwrap()
    }

    #[test]
    fn euler_is_first_order() {
        let est = estimate_order(Method::Euler, &ic(), &fig2(), 10.0, &[0.1, 0.05, 0.025]).unwrap();
        assert!((est.order - 1.0).abs() < 0.3, "order {}", est.order);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let est = estimate_order(Method::Rk4, &ic(), &fig2(), 10.0, &[0.1, 0.05, 0.025]).unwrap();
        assert!((est.order - 4.0).abs() < 0.5, "order {}", est.order);
    }

    #[test]
    fn diverging_step_is_rejected() {
        let stiff = LVParams::new(1000.0, 1000.0, 100.0, 1e-5).unwrap();
        let ic = InitialCondition::new(0.0, 1.0, 1.0).unwrap();
        let err = estimate_order(Method::Euler, &ic, &stiff, 1.0, &[0.1, 0.05, 0.025]).unwrap_err();
        assert!(matches!(err, AnalyzeError::UnstableStep { .. }));
    }

    #[test]
    fn needs_three_distinct_steps() {
        let err = estimate_order(Method::Rk4, &ic(), &fig2(), 10.0, &[0.1, 0.1, 0.05]).unwrap_err();
        assert!(matches!(err, AnalyzeError::InvalidSteps(_)));
        let err =
            estimate_order(Method::Rk4, &ic(), &fig2(), 10.0, &[0.3, 0.05, 0.025]).unwrap_err();
        assert!(matches!(err, AnalyzeError::InvalidSteps(_)));
    }
}
