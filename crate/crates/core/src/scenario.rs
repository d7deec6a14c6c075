//! Scenario configuration: presets, the flat `key = value` text format and
//! its writer.
//!
//! ```text
//! # comments run to end of line
//! preset = paper-fig3          # optional base, later keys override it
//! name = stiff-run
//! params.r = 1000
//! params.a = 1000
//! params.b = 100
//! params.m = 1e-5
//! initial.t0 = 0               # default 0
//! initial.h0 = 1
//! initial.p0 = 1
//! integration.h = 0.003
//! integration.steps = 10000
//! integration.method = rk4     # euler | heun | rk4, default rk4
//! integration.divergence_bound = 1e12
//! thresholds.r2_min = 0.999    # any classifier threshold
//! control.setpoint = 1         # any control.* key enables the control block
//! control.plant.gain = 2
//! control.pid.kp = 1
//! sweep.r.min = 100            # any sweep.* key enables the sweep block
//! sweep.r.max = 1000
//! sweep.r.count = 5
//! sweep.r.spacing = log
//! sweep.t_end = 30
//! ```
//!
//! Numbers use a decimal point. Unknown and repeated keys are rejected.
//! Sweep axes keep the order in which they first appear.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::analyze::ClassifierThresholds;
use crate::control::{LvSetup, PIDParams, PlantFO, SetpointProfile};
use crate::dynamics::{InitialCondition, LVParams};
use crate::integrate::{IntegrationConfig, Method, DEFAULT_DIVERGENCE_BOUND};
use crate::sweep::{Axis, Spacing, SweepParam, SweepSpec, DEFAULT_MAX_CELLS};

pub const PRESET_FIG2: &str = "paper-fig2";
pub const PRESET_FIG3: &str = "paper-fig3";
pub const PRESETS: [&str; 2] = [PRESET_FIG2, PRESET_FIG3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSetup {
    pub plant: PlantFO,
    pub pid: PIDParams,
    pub setpoint: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for ControlSetup {
    fn default() -> Self {
        Self {
            plant: PlantFO::default(),
            pid: PIDParams::default(),
            setpoint: 1.0,
            dt: 0.01,
            t_end: 20.0,
        }
    }
}

impl ControlSetup {
    pub fn setpoint_profile(&self) -> SetpointProfile {
        SetpointProfile::Constant {
            value: self.setpoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    pub axes: Vec<Axis>,
    /// Per-cell horizon; `None` uses the scenario's own span.
    pub t_end: Option<f64>,
    pub max_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: LVParams,
    pub ic: InitialCondition,
    pub integration: IntegrationConfig,
    pub thresholds: ClassifierThresholds,
    pub control: Option<ControlSetup>,
    pub sweep: Option<SweepSetup>,
}

impl Scenario {
    /// Built-in scenarios. Each call returns a fresh value.
    pub fn preset(name: &str) -> Option<Scenario> {
        let (params, ic, integration) = match name {
            PRESET_FIG2 => (
                LVParams::new(0.2, 0.8, 1.03, 0.04),
                InitialCondition::new(0.0, 10.0, 2.0),
                IntegrationConfig::new(0.25, 2000, Method::Euler),
            ),
            PRESET_FIG3 => (
                LVParams::new(1000.0, 1000.0, 100.0, 0.00001),
                InitialCondition::new(0.0, 1.0, 1.0),
                IntegrationConfig::new(0.003, 10_000, Method::Rk4),
            ),
            _ => return None,
        };
        Some(Scenario {
            name: name.to_string(),
            params: params.expect("preset coefficients are finite"),
            ic: ic.expect("preset initial condition is valid"),
            integration: integration.expect("preset integration config is valid"),
            thresholds: ClassifierThresholds::default(),
            control: None,
            sweep: None,
        })
    }

    pub fn lv_setup(&self) -> LvSetup {
        LvSetup {
            params: self.params,
            ic: self.ic,
            config: self.integration,
        }
    }

    /// Sweep spec built on this scenario's values, or a single pinned cell
    /// when the scenario has no sweep block.
    pub fn sweep_spec(&self) -> SweepSpec {
        let setup = self.sweep.clone().unwrap_or(SweepSetup {
            axes: Vec::new(),
            t_end: None,
            max_cells: DEFAULT_MAX_CELLS,
        });
        SweepSpec {
            axes: setup.axes,
            params: self.params,
            ic: self.ic,
            h: self.integration.h(),
            method: self.integration.method(),
            divergence_bound: self.integration.divergence_bound(),
            t_end: setup.t_end.unwrap_or_else(|| self.integration.t_span()),
            thresholds: self.thresholds,
            max_cells: setup.max_cells,
        }
    }

    /// Writes the scenario as config text. Every field is written, so the
    /// output does not depend on presets or defaults.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let num = |v: f64| format!("{v:?}");
        kv("name", self.name.clone());
        kv("params.r", num(self.params.r()));
        kv("params.a", num(self.params.a()));
        kv("params.b", num(self.params.b()));
        kv("params.m", num(self.params.m()));
        kv("initial.t0", num(self.ic.t0()));
        kv("initial.h0", num(self.ic.h0()));
        kv("initial.p0", num(self.ic.p0()));
        kv("integration.h", num(self.integration.h()));
        kv("integration.steps", self.integration.n_steps().to_string());
        kv("integration.method", self.integration.method().to_string());
        kv(
            "integration.divergence_bound",
            num(self.integration.divergence_bound()),
        );
        for key in ClassifierThresholds::KEYS {
            kv(
                &format!("thresholds.{key}"),
                num(self.thresholds.get(key).unwrap()),
            );
        }
        if let Some(c) = &self.control {
            kv("control.setpoint", num(c.setpoint));
            kv("control.dt", num(c.dt));
            kv("control.t_end", num(c.t_end));
            kv("control.plant.gain", num(c.plant.gain));
            kv("control.plant.tau", num(c.plant.tau));
            kv("control.plant.y0", num(c.plant.y0));
            kv("control.pid.kp", num(c.pid.kp));
            kv("control.pid.ki", num(c.pid.ki));
            kv("control.pid.kd", num(c.pid.kd));
            kv("control.pid.u_min", num(c.pid.u_min));
            kv("control.pid.u_max", num(c.pid.u_max));
        }
        if let Some(s) = &self.sweep {
            if let Some(t) = s.t_end {
                kv("sweep.t_end", num(t));
            }
            kv("sweep.max_cells", s.max_cells.to_string());
            for axis in &s.axes {
                let p = axis.param;
                kv(&format!("sweep.{p}.min"), num(axis.min));
                kv(&format!("sweep.{p}.max"), num(axis.max));
                kv(&format!("sweep.{p}.count"), axis.count.to_string());
                kv(
                    &format!("sweep.{p}.spacing"),
                    axis.spacing.as_str().to_string(),
                );
            }
        }
        out
    }
}

const CONTROL_KEYS: [&str; 11] = [
    "control.setpoint",
    "control.dt",
    "control.t_end",
    "control.plant.gain",
    "control.plant.tau",
    "control.plant.y0",
    "control.pid.kp",
    "control.pid.ki",
    "control.pid.kd",
    "control.pid.u_min",
    "control.pid.u_max",
];

const AXIS_FIELDS: [&str; 4] = ["min", "max", "count", "spacing"];

fn known_key(key: &str) -> bool {
    const FIXED: [&str; 13] = [
        "name",
        "preset",
        "params.r",
        "params.a",
        "params.b",
        "params.m",
        "initial.t0",
        "initial.h0",
        "initial.p0",
        "integration.h",
        "integration.steps",
        "integration.method",
        "integration.divergence_bound",
    ];
    if FIXED.contains(&key) || CONTROL_KEYS.contains(&key) {
        return true;
    }
    if let Some(th) = key.strip_prefix("thresholds.") {
        return ClassifierThresholds::KEYS.contains(&th);
    }
    if let Some(rest) = key.strip_prefix("sweep.") {
        if rest == "t_end" || rest == "max_cells" {
            return true;
        }
        if let Some((axis, field)) = rest.split_once('.') {
            return axis.parse::<SweepParam>().is_ok() && AXIS_FIELDS.contains(&field);
        }
    }
    false
}

struct Entry {
    line: usize,
    value: String,
}

struct Document {
    entries: HashMap<String, Entry>,
    axis_order: Vec<SweepParam>,
}

impl Document {
    fn lex(text: &str) -> Result<Self, ScenarioError> {
        let mut entries: HashMap<String, Entry> = HashMap::new();
        let mut axis_order = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ScenarioError::Parse {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                })?;
            let (key, value) = (key.trim(), value.trim());
            if !known_key(key) {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("`{key}` has no value"),
                });
            }
            if let Some(first) = entries.get(key) {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("`{key}` already set on line {}", first.line),
                });
            }
            if let Some(axis) = key
                .strip_prefix("sweep.")
                .and_then(|rest| rest.split_once('.'))
                .and_then(|(axis, _)| axis.parse::<SweepParam>().ok())
            {
                if !axis_order.contains(&axis) {
                    axis_order.push(axis);
                }
            }
            entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        Ok(Self {
            entries,
            axis_order,
        })
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ScenarioError> {
        self.entries
            .get(key)
            .map(|e| {
                e.value.parse::<f64>().map_err(|_| ScenarioError::Parse {
                    line: e.line,
                    message: format!(
                        "`{key}`: `{}` is not a number (use a decimal point)",
                        e.value
                    ),
                })
            })
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, ScenarioError> {
        self.entries
            .get(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| ScenarioError::Parse {
                    line: e.line,
                    message: format!("`{key}`: `{}` is not a non-negative integer", e.value),
                })
            })
            .transpose()
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        self.entries.keys().any(|k| k.starts_with(prefix))
    }
}

fn required(v: Option<f64>, field: &str) -> Result<f64, ScenarioError> {
    v.ok_or_else(|| ScenarioError::invalid(field, "required, no default"))
}

/// Parses scenario config text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc = Document::lex(text)?;
    let base = match doc.str("preset") {
        Some(name) => Some(Scenario::preset(name).ok_or_else(|| {
            ScenarioError::invalid(
                "preset",
                format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")),
            )
        })?),
        None => None,
    };

    let pick = |key: &str, fallback: Option<f64>| -> Result<Option<f64>, ScenarioError> {
        Ok(doc.f64(key)?.or(fallback))
    };
    let b = base.as_ref();

    let r = required(pick("params.r", b.map(|s| s.params.r()))?, "params.r")?;
    let a = required(pick("params.a", b.map(|s| s.params.a()))?, "params.a")?;
    let bb = required(pick("params.b", b.map(|s| s.params.b()))?, "params.b")?;
    let m = required(pick("params.m", b.map(|s| s.params.m()))?, "params.m")?;
    let params =
        LVParams::new(r, a, bb, m).map_err(|e| ScenarioError::invalid("params", e.to_string()))?;

    let t0 = pick("initial.t0", b.map(|s| s.ic.t0()))?.unwrap_or(0.0);
    let h0 = required(pick("initial.h0", b.map(|s| s.ic.h0()))?, "initial.h0")?;
    let p0 = required(pick("initial.p0", b.map(|s| s.ic.p0()))?, "initial.p0")?;
    let ic = InitialCondition::new(t0, h0, p0)
        .map_err(|e| ScenarioError::invalid("initial", e.to_string()))?;

    let h = required(
        pick("integration.h", b.map(|s| s.integration.h()))?,
        "integration.h",
    )?;
    if !(h.is_finite() && h > 0.0) {
        return Err(ScenarioError::invalid(
            "integration.h",
            format!("must be > 0, got {h}"),
        ));
    }
    let steps = doc
        .usize("integration.steps")?
        .or(b.map(|s| s.integration.n_steps()))
        .ok_or_else(|| ScenarioError::invalid("integration.steps", "required, no default"))?;
    if steps == 0 {
        return Err(ScenarioError::invalid(
            "integration.steps",
            "must be at least 1",
        ));
    }
    let method = match doc.str("integration.method") {
        Some(s) => s
            .parse::<Method>()
            .map_err(|e| ScenarioError::invalid("integration.method", e.to_string()))?,
        None => b.map(|s| s.integration.method()).unwrap_or(Method::Rk4),
    };
    let bound = pick(
        "integration.divergence_bound",
        b.map(|s| s.integration.divergence_bound()),
    )?
    .unwrap_or(DEFAULT_DIVERGENCE_BOUND);
    let integration = IntegrationConfig::with_bound(h, steps, method, bound)
        .map_err(|e| ScenarioError::invalid("integration.divergence_bound", e.to_string()))?;

    let mut thresholds = b.map(|s| s.thresholds).unwrap_or_default();
    for key in ClassifierThresholds::KEYS {
        let field = format!("thresholds.{key}");
        if let Some(v) = doc.f64(&field)? {
            thresholds
                .set(key, v)
                .map_err(|e| ScenarioError::invalid(&field, e.to_string()))?;
        }
    }

    let control = if doc.has_prefix("control.") {
        Some(parse_control(&doc, b.and_then(|s| s.control))?)
    } else {
        b.and_then(|s| s.control)
    };

    let sweep = if doc.has_prefix("sweep.") {
        Some(parse_sweep(&doc)?)
    } else {
        b.and_then(|s| s.sweep.clone())
    };

    let name = doc
        .str("name")
        .map(str::to_string)
        .or_else(|| b.map(|s| s.name.clone()))
        .unwrap_or_else(|| "custom".to_string());

    Ok(Scenario {
        name,
        params,
        ic,
        integration,
        thresholds,
        control,
        sweep,
    })
}

fn parse_control(
    doc: &Document,
    base: Option<ControlSetup>,
) -> Result<ControlSetup, ScenarioError> {
    let d = base.unwrap_or_default();
    let get = |key: &str, fallback: f64| -> Result<f64, ScenarioError> {
        Ok(doc.f64(key)?.unwrap_or(fallback))
    };
    let plant = PlantFO::new(
        get("control.plant.gain", d.plant.gain)?,
        get("control.plant.tau", d.plant.tau)?,
        get("control.plant.y0", d.plant.y0)?,
    )
    .map_err(|e| ScenarioError::invalid("control.plant", e.to_string()))?;
    let pid = PIDParams::new(
        get("control.pid.kp", d.pid.kp)?,
        get("control.pid.ki", d.pid.ki)?,
        get("control.pid.kd", d.pid.kd)?,
        get("control.pid.u_min", d.pid.u_min)?,
        get("control.pid.u_max", d.pid.u_max)?,
    )
    .map_err(|e| ScenarioError::invalid("control.pid", e.to_string()))?;
    let setpoint = get("control.setpoint", d.setpoint)?;
    let dt = get("control.dt", d.dt)?;
    let t_end = get("control.t_end", d.t_end)?;
    if !setpoint.is_finite() {
        return Err(ScenarioError::invalid("control.setpoint", "must be finite"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ScenarioError::invalid(
            "control.dt",
            format!("must be > 0, got {dt}"),
        ));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(ScenarioError::invalid(
            "control.t_end",
            format!("must be > 0, got {t_end}"),
        ));
    }
    Ok(ControlSetup {
        plant,
        pid,
        setpoint,
        dt,
        t_end,
    })
}

fn parse_sweep(doc: &Document) -> Result<SweepSetup, ScenarioError> {
    let t_end = doc.f64("sweep.t_end")?;
    if let Some(t) = t_end {
        if !(t.is_finite() && t > 0.0) {
            return Err(ScenarioError::invalid(
                "sweep.t_end",
                format!("must be > 0, got {t}"),
            ));
        }
    }
    let max_cells = doc.usize("sweep.max_cells")?.unwrap_or(DEFAULT_MAX_CELLS);
    let mut axes = Vec::with_capacity(doc.axis_order.len());
    for &param in &doc.axis_order {
        let key = |field: &str| format!("sweep.{param}.{field}");
        let min = required(doc.f64(&key("min"))?, &key("min"))?;
        let max = required(doc.f64(&key("max"))?, &key("max"))?;
        let count = doc
            .usize(&key("count"))?
            .ok_or_else(|| ScenarioError::invalid(&key("count"), "required, no default"))?;
        let spacing = match doc.str(&key("spacing")) {
            Some(s) => s
                .parse::<Spacing>()
                .map_err(|e| ScenarioError::invalid(&key("spacing"), e.to_string()))?,
            None => Spacing::Linear,
        };
        let axis = Axis {
            param,
            min,
            max,
            count,
            spacing,
        };
        axis.validate()
            .map_err(|e| ScenarioError::invalid(&format!("sweep.{param}"), e.to_string()))?;
        axes.push(axis);
    }
    Ok(SweepSetup {
        axes,
        t_end,
        max_cells,
    })
}
