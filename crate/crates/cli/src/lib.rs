//! `lvreg` command line: parse a scenario, run one command, write files.
//!
//! Output files, all under `--out`:
//!
//! * `simulate`: `trajectory.csv`, `report.json` (no label)
//! * `analyze`: `trajectory.csv`, `report.json`
//! * `sweep`: `sweep.csv`, `report.json` (label counts)
//! * `control-compare`: `control.csv` (`t,setpoint,pid_y,pid_u,lv_y,lv_u`), `report.json`
//!
//! Exit codes: 0 success (a DIVERGED run is a success), 2 configuration or
//! usage error, 3 I/O error, 4 internal failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lvreg::analyze::classify;
use lvreg::control::{compare, LoopResult};
use lvreg::integrate::{simulate, Method};
use lvreg::output::{write_sweep_csv, write_trajectory_csv, OutputError, Report};
use lvreg::scenario::{parse_scenario, Scenario, PRESETS};
use lvreg::sweep::run_sweep;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(
    name = "lvreg",
    version,
    about = "Lotka-Volterra simulation and regime analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the scenario and write the trajectory.
    Simulate(CommonArgs),
    /// Integrate, classify the regime and write a report.
    Analyze(CommonArgs),
    /// Classify every cell of the scenario's sweep grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the grid-size cap.
        #[arg(long, value_name = "N")]
        max_cells: Option<usize>,
    },
    /// PID loop against the calibrated LV feedforward drive.
    ControlCompare(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file, or a preset name (paper-fig2, paper-fig3).
    #[arg(long, value_name = "FILE|PRESET")]
    pub scenario: String,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long, value_name = "N")]
    pub steps: Option<usize>,
    /// Classifier threshold override, repeatable.
    #[arg(long = "threshold", value_name = "KEY=VALUE", value_parser = parse_threshold)]
    pub thresholds: Vec<(String, f64)>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

fn parse_threshold(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v = v
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("`{}` is not a number", v.trim()))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io { path: PathBuf, message: String },
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Internal(_) => "internal",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        let mut rec = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
        });
        match self {
            CliError::Config(m) | CliError::Internal(m) => rec["message"] = json!(m),
            CliError::Io { path, message } => {
                rec["message"] = json!(message);
                rec["path"] = json!(path.display().to_string());
            }
        }
        rec.to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Internal(m) => f.write_str(m),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn output_err(path: &Path, e: OutputError) -> CliError {
    match e {
        OutputError::Json(e) => CliError::Internal(format!("{}: {e}", path.display())),
        other => io_err(path, other),
    }
}

/// What a successful command produced.
#[derive(Debug)]
pub struct Summary {
    pub message: String,
    pub files: Vec<PathBuf>,
}

/// A preset name wins unless a file of that name exists.
pub fn load_scenario(spec: &str) -> Result<Scenario, CliError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(s) = Scenario::preset(spec) {
            return Ok(s);
        }
    }
    let text = fs::read_to_string(path).map_err(|e| {
        io_err(
            path,
            format!("{e} (not a file, and not a preset: {})", PRESETS.join(", ")),
        )
    })?;
    parse_scenario(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn apply_overrides(mut s: Scenario, args: &CommonArgs) -> Result<Scenario, CliError> {
    if let Some(m) = args.method {
        s.integration = s.integration.with_method(m);
    }
    if let Some(n) = args.steps {
        s.integration = s
            .integration
            .with_steps(n)
            .map_err(|e| CliError::Config(format!("--steps: {e}")))?;
    }
    for (k, v) in &args.thresholds {
        s.thresholds
            .set(k, *v)
            .map_err(|e| CliError::Config(format!("--threshold: {e}")))?;
    }
    Ok(s)
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn write_report(dir: &Path, report: &Report) -> Result<PathBuf, CliError> {
    let path = dir.join("report.json");
    let text = report.to_json().map_err(|e| output_err(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn run(cli: Cli) -> Result<Summary, CliError> {
    let (common, max_cells) = match &cli.command {
        Command::Simulate(c) | Command::Analyze(c) | Command::ControlCompare(c) => (c, None),
        Command::Sweep { common, max_cells } => (common, *max_cells),
    };
    let scenario = apply_overrides(load_scenario(&common.scenario)?, common)?;
    let out = &common.out;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let name = scenario.name.as_str();
    let method = scenario.integration.method();

    match &cli.command {
        Command::Simulate(_) | Command::Analyze(_) => {
            let traj = simulate(&scenario.ic, &scenario.params, &scenario.integration);
            let (csv_path, w) = create(out, "trajectory.csv")?;
            write_trajectory_csv(w, &traj).map_err(|e| output_err(&csv_path, e))?;
            let (report, message) = if matches!(cli.command, Command::Analyze(_)) {
                let rep = classify(&traj, &scenario.params, &scenario.thresholds);
                let report = Report::analysis(name, method, &traj, &scenario.params, &rep);
                let msg = format!("{name} ({method}): {}", rep.label);
                (report, msg)
            } else {
                let report = Report::simulation(name, method, &traj, &scenario.params);
                let msg = format!("{name} ({method}): {} samples", traj.len());
                (report, msg)
            };
            let message = match traj.early_stop() {
                Some(stop) => format!("{message}, stopped early at step {}", stop.step),
                None => message,
            };
            let report_path = write_report(out, &report)?;
            Ok(Summary {
                message,
                files: vec![csv_path, report_path],
            })
        }
        Command::Sweep { .. } => {
            let mut spec = scenario.sweep_spec();
            if let Some(cap) = max_cells {
                spec.max_cells = cap;
            }
            let result = run_sweep(&spec).map_err(|e| CliError::Config(e.to_string()))?;
            let (csv_path, w) = create(out, "sweep.csv")?;
            write_sweep_csv(w, &result).map_err(|e| output_err(&csv_path, e))?;
            let report_path = write_report(out, &Report::sweep(name, method, &result))?;
            let counts: Vec<String> = lvreg::analyze::Regime::ALL
                .iter()
                .filter(|&&l| result.count(l) > 0)
                .map(|&l| format!("{l} {}", result.count(l)))
                .collect();
            Ok(Summary {
                message: format!(
                    "{name}: {} cells ({})",
                    result.records.len(),
                    counts.join(", ")
                ),
                files: vec![csv_path, report_path],
            })
        }
        Command::ControlCompare(_) => {
            let c = scenario.control.unwrap_or_default();
            let cmp = compare(
                &c.plant,
                &c.pid,
                &scenario.lv_setup(),
                &c.setpoint_profile(),
                c.dt,
                c.t_end,
                scenario.thresholds.final_frac,
            );
            let (csv_path, w) = create(out, "control.csv")?;
            write_control_csv(w, cmp.pid.as_ref().ok(), cmp.lv.as_ref().ok())
                .map_err(|e| io_err(&csv_path, e))?;
            let report_path = write_report(out, &Report::comparison(name, method, &cmp))?;
            let side = |r: &Result<LoopResult, _>| match r {
                Ok(l) => format!("IAE {:.4}", l.metrics.iae),
                Err(e) => format!("failed ({e})"),
            };
            Ok(Summary {
                message: format!("{name}: PID {} | LV {}", side(&cmp.pid), side(&cmp.lv)),
                files: vec![csv_path, report_path],
            })
        }
    }
}

/// Empty cells where a side failed.
fn write_control_csv<W: std::io::Write>(
    out: W,
    pid: Option<&LoopResult>,
    lv: Option<&LoopResult>,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "setpoint", "pid_y", "pid_u", "lv_y", "lv_u"])?;
    let base = pid.or(lv);
    let n = base.map_or(0, LoopResult::len);
    let cell = |side: Option<&LoopResult>, pick: fn(&LoopResult, usize) -> f64, k: usize| {
        side.map(|r| format!("{:.16e}", pick(r, k)))
            .unwrap_or_default()
    };
    for k in 0..n {
        let b = base.unwrap();
        w.write_record([
            format!("{:.16e}", b.time(k)),
            format!("{:.16e}", b.setpoint[k]),
            cell(pid, |r, k| r.y[k], k),
            cell(pid, |r, k| r.u[k], k),
            cell(lv, |r, k| r.y[k], k),
            cell(lv, |r, k| r.u[k], k),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_argument_parsing() {
        assert_eq!(parse_threshold("r2_min=0.99"), Ok(("r2_min".into(), 0.99)));
        assert!(parse_threshold("r2_min").is_err());
        assert!(parse_threshold("r2_min=abc").is_err());
    }

    #[test]
    fn presets_resolve_without_files() {
        assert_eq!(
            load_scenario("paper-fig3").unwrap(),
            Scenario::preset("paper-fig3").unwrap()
        );
        let err = load_scenario("no-such-thing").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn error_records_are_json() {
        let err = CliError::Io {
            path: "x/y".into(),
            message: "denied".into(),
        };
        let v: serde_json::Value = serde_json::from_str(&err.to_json()).unwrap();
        assert_eq!(v["error"], "io");
        assert_eq!(v["exit_code"], 3);
        assert_eq!(v["path"], "x/y");
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        let cli = Cli::parse_from([
            "lvreg",
            "analyze",
            "--scenario",
            "paper-fig2",
            "--out",
            "/nonexistent-unused",
            "--threshold",
            "nope=1",
        ]);
        let err = run(cli).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}
