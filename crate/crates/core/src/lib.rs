//! Lotka-Volterra predator–prey toolkit.
//!
//! * [`dynamics`]: vector field, fixed points, first integral.
//! * [`integrate`]: fixed-step Euler / Heun / RK4 with divergence guards.
//! * [`analyze`]: windowed linear fits, peak detection, regime labels,
//!   convergence-order estimation.
//! * [`control`]: discrete PID and an LV-driven feedforward signal on a
//!   first-order plant.
//! * [`sweep`]: coefficient-grid regime maps.
//! * [`scenario`] and [`output`]: config text, presets, CSV and JSON formats.

pub mod analyze;
pub mod control;
pub mod dynamics;
pub mod integrate;
pub mod output;
pub mod scenario;
pub mod sweep;

pub use analyze::{
    classify, estimate_order, find_peaks, fit_linear, AnalyzeError, ClassifierThresholds,
    LinearFit, Peak, Regime, RegimeReport, Series,
};
pub use control::{
    calibrate_gain, compare, lv_feedforward_signal, pid_step, plant_step, run_pid_loop, Comparison,
    ControlError, LoopResult, LvSetup, PIDParams, PIDState, PlantFO, SetpointProfile,
};
pub use dynamics::{
    conserved_quantity, equilibrium, rhs, Derivative, DynamicsError, InitialCondition, LVParams,
    State,
};
pub use integrate::{
    reference_trajectory, simulate, step, EarlyStop, IntegrateError, IntegrationConfig, Method,
    StopCause, Trajectory,
};
pub use output::{OutputError, Report};
pub use scenario::{parse_scenario, ControlSetup, Scenario, ScenarioError, SweepSetup};
pub use sweep::{
    run_sweep, Axis, Spacing, SweepError, SweepParam, SweepRecord, SweepResult, SweepSpec,
};
