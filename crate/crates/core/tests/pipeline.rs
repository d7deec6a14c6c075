use std::fs::File;
use std::io::{BufReader, BufWriter};

use lvreg::analyze::{classify, estimate_order, AnalyzeError, Regime};
use lvreg::integrate::{simulate, Method};
use lvreg::output::{read_trajectory_csv, trajectory_rows, write_trajectory_csv, Report};
use lvreg::scenario::parse_scenario;
use lvreg::sweep::{run_sweep, SweepError};

const SMALL_ORBIT: &str = "\
name = small-orbit
params.r = 0.2
params.a = 0.8
params.b = 1.03
params.m = 0.04
initial.h0 = 0.05
initial.p0 = 0.3
integration.h = 0.05
integration.steps = 12000
";

#[test]
fn config_to_file_and_back() {
    let s = parse_scenario(SMALL_ORBIT).unwrap();
    let traj = simulate(&s.ic, &s.params, &s.integration);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    write_trajectory_csv(BufWriter::new(File::create(&path).unwrap()), &traj).unwrap();
    let rows = read_trajectory_csv(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(rows, trajectory_rows(&traj));

    let rep = classify(&traj, &s.params, &s.thresholds);
    assert_eq!(rep.label, Regime::Oscillatory);
    let report = Report::analysis(&s.name, s.integration.method(), &traj, &s.params, &rep);
    assert!(report.metrics["conserved_drift"].unwrap() < 1e-6);
    assert!(report.peaks.len() >= 6);
}

#[test]
fn coarse_euler_inflates_the_same_orbit() {
    let text = SMALL_ORBIT
        .replace("integration.h = 0.05", "integration.h = 0.25")
        .replace(
            "integration.steps = 12000",
            "integration.steps = 2400\nintegration.method = euler",
        );
    let s = parse_scenario(&text).unwrap();
    let traj = simulate(&s.ic, &s.params, &s.integration);
    let rep = classify(&traj, &s.params, &s.thresholds);
    assert_eq!(rep.label, Regime::GrowingOscillation);
    let amps: Vec<f64> = rep.evidence.h_peaks.peaks.iter().map(|p| p.value).collect();
    assert!(
        amps.len() >= 3 && amps.windows(2).all(|w| w[1] > w[0]),
        "{amps:?}"
    );
}

#[test]
fn sweep_from_config_matches_cells() {
    let text = format!(
        "{SMALL_ORBIT}integration.method = rk4\nsweep.t_end = 50\n\
         sweep.h0.min = 0.05\nsweep.h0.max = 1\nsweep.h0.count = 4\n"
    );
    let s = parse_scenario(&text).unwrap();
    let result = run_sweep(&s.sweep_spec()).unwrap();
    assert_eq!(result.records.len(), 4);
    assert_eq!(
        result.records.iter().map(|r| r.index).collect::<Vec<_>>(),
        [0, 1, 2, 3]
    );
    assert_eq!(result.records[0].coordinates, [0.05]);
    assert_eq!(result.records[3].coordinates, [1.0]);
}

#[test]
fn sweep_rejects_oversized_grid() {
    let text = format!(
        "{SMALL_ORBIT}sweep.max_cells = 10\nsweep.r.min = 0.1\nsweep.r.max = 1\nsweep.r.count = 4\n\
         sweep.m.min = 0.01\nsweep.m.max = 0.1\nsweep.m.count = 3\n"
    );
    let s = parse_scenario(&text).unwrap();
    assert!(matches!(
        run_sweep(&s.sweep_spec()),
        Err(SweepError::GridTooLarge { cells: 12, cap: 10 })
    ));
}

#[test]
fn order_estimation_rejects_unstable_steps() {
    let s = parse_scenario("preset = paper-fig2\n").unwrap();
    let err = estimate_order(Method::Euler, &s.ic, &s.params, 10.0, &[2.0, 1.0, 0.5]).unwrap_err();
    assert!(matches!(err, AnalyzeError::UnstableStep { .. }), "{err:?}");
    let err = estimate_order(Method::Rk4, &s.ic, &s.params, 10.0, &[0.1, 0.1, 0.05]).unwrap_err();
    assert!(matches!(err, AnalyzeError::InvalidSteps(_)));
}

#[test]
fn fig2_orbit_oscillates_over_several_periods() {
    let text = "preset = paper-fig2\nintegration.method = rk4\nintegration.h = 0.01\nintegration.steps = 500000\n";
    let s = parse_scenario(text).unwrap();
    let traj = simulate(&s.ic, &s.params, &s.integration);
    let rep = classify(&traj, &s.params, &s.thresholds);
    assert_eq!(rep.label, Regime::Oscillatory);
    let times: Vec<f64> = rep.evidence.h_peaks.peaks.iter().map(|p| p.time).collect();
    assert_eq!(times.len(), 3, "{times:?}");
    // evenly spaced: one period is ~1539 time units
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(
        (gaps[0] - gaps[1]).abs() < 1.0 && (gaps[0] - 1539.0).abs() < 5.0,
        "{gaps:?}"
    );
    assert!(lvreg::analyze::conserved_drift(&traj, &s.params).unwrap() < 1e-6);
}
