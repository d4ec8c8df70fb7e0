use std::f64::consts::{E, PI};

use bh_core::correctors::CorrectorCoeffs;
use bh_core::error::Error;
use bh_core::function_core::hilbert_gb;
use bh_core::harness::checks::{check_apriori_single, Check};
use bh_core::harness::config::{Mode, ScenarioConfig};
use bh_core::harness::export::{read_trajectory_csv, write_trajectory_csv, TrajectoryRow, CSV_HEADER};
use bh_core::harness::fits::{envelope_fit, fit_corrector_slope, log_points, Envelope};
use bh_core::harness::scenario::{read_summary_json, run_scenario};
use bh_core::single_shock::{outer_solve, tanh_preset, SolverConstants};
use proptest::prelude::*;

fn one_side(coef: f64, smooth: impl Fn(f64) -> f64, right: bool) -> Vec<(f64, f64)> {
    log_points(1e-3, 1e-1, 16, !right, right)
        .into_iter()
        .map(|x| (x, coef * x.abs() * x.abs().ln() + smooth(x)))
        .collect()
}

#[test]
#[allow(clippy::approx_constant)]
fn planted_slope_is_recovered() {
    let s = one_side(0.6366, |x| 0.3 * x - 0.7 * x * x, true);
    let fit = fit_corrector_slope(&s, 0.0).unwrap();
    assert!((fit.coefficient - 2.0 / PI).abs() < 1e-3, "{fit:?}");
    assert!(!fit.poor_fit);
    // the c₁ = 3 corrector on the left of the shock
    let s = one_side(3.0 * 2.0 / PI, |x| 0.1 * x, false);
    let fit = fit_corrector_slope(&s, 0.0).unwrap();
    assert!((fit.coefficient - 1.90986).abs() < 1e-4, "{fit:?}");
}

#[test]
fn smooth_data_has_no_slope_and_is_flagged() {
    let s = one_side(0.0, |x| 0.5 * x + 2.0 * x * x, true);
    let fit = fit_corrector_slope(&s, 0.0).unwrap();
    assert!(fit.coefficient.abs() < 1e-9, "{fit:?}");
    assert!(fit.poor_fit, "{fit:?}");
}

#[test]
fn slope_fit_needs_resolution_on_one_side() {
    let few: Vec<(f64, f64)> = log_points(1e-3, 1e-1, 3, false, true).into_iter().map(|x| (x, x)).collect();
    assert!(fit_corrector_slope(&few, 0.0).is_err());
    let both: Vec<(f64, f64)> = log_points(1e-3, 1e-1, 16, true, true).into_iter().map(|x| (x, x)).collect();
    assert!(fit_corrector_slope(&both, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn planted_coefficients_within_one_percent(c in 0.1f64..4.0, p in -2.0f64..2.0, q in -5.0f64..5.0, right: bool) {
        let s = one_side(c, |x| p * x + q * x * x, right);
        let fit = fit_corrector_slope(&s, 0.0).unwrap();
        prop_assert!((fit.coefficient - c).abs() <= 1e-2 * c);
    }
}

#[test]
fn transform_of_g0_fits_a_constant_envelope() {
    let fit = envelope_fit(Envelope::Constant, |x| hilbert_gb(0.0, x, 0), 1e-4, 1.0 / (2.0 * E), 24).unwrap();
    assert!(fit.bounded, "{fit:?}");
    assert!(fit.fitted.is_finite() && fit.max_ratio > 0.0);
    let fit = envelope_fit(Envelope::LnOverX, |x| hilbert_gb(0.0, x, 2), 1e-4, 1.0 / (2.0 * E), 24).unwrap();
    assert!(fit.bounded, "{fit:?}");
}

#[test]
fn inverse_growth_is_not_bounded_by_a_constant() {
    let fit = envelope_fit(Envelope::Constant, |x| Ok(1.0 / x.abs()), 1e-4, 0.1, 16).unwrap();
    assert!(!fit.bounded, "{fit:?}");
}

fn row(k: usize, two: bool) -> TrajectoryRow {
    let x = -1.0 + (k as f64 + 0.5) / 7.0;
    TrajectoryRow {
        t_frame: -0.05 + 1e-3 * k as f64,
        t_phys: 1e-3 * k as f64 / 3.0,
        x,
        w: (x * 1.3).sin(),
        phi: x.abs() * x.abs().ln(),
        u: 0.1f64.powi(k as i32 + 20),
        sigma1: PI,
        sigma2: two.then_some(E),
        y1: -1e-17,
        y2: two.then_some(f64::MIN_POSITIVE),
    }
}

#[test]
fn empty_trajectory_writes_the_header() {
    let mut out = Vec::new();
    write_trajectory_csv(&[], &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let rows: Vec<TrajectoryRow> = (0..12).map(|k| row(k, k % 2 == 0)).collect();
    let mut out = Vec::new();
    write_trajectory_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out.clone()).unwrap();
    assert!(!text.contains('\r'));
    // single-shock rows leave the second shock empty
    assert!(text.lines().nth(2).unwrap().ends_with(","));
    let back = read_trajectory_csv(out.as_slice()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.u.to_bits(), b.u.to_bits());
        assert_eq!(a.phi.to_bits(), b.phi.to_bits());
        assert_eq!(a.y2.map(f64::to_bits), b.y2.map(f64::to_bits));
        assert_eq!(a, b);
    }
}

#[test]
fn config_errors() {
    let err = ScenarioConfig::from_toml_str("schema_version = 1\nmode = \"three_shock\"\n").unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
    let err = ScenarioConfig::from_toml_str("schema_version = 7\nmode = \"single\"\n").unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
    let err = ScenarioConfig::from_toml_str("schema_version = 1\nmode = \"single\"\n[fv]\ncfl = 2.0\n").unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
    let err = ScenarioConfig::from_toml_str("schema_version = 1\nmode = \"single\"\nunknown = 1\n").unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = ScenarioConfig::for_mode(Mode::FvRef);
    cfg.seed = 99;
    cfg.solver.m0 = Some(3.0);
    let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn burgers_reference_reports_the_collision_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::for_mode(Mode::BurgersRef);
    cfg.output.dir = Some(dir.path().to_path_buf());
    cfg.reference.samples = 51;
    let s = run_scenario(&cfg).unwrap();
    assert_eq!(s.metrics["collision_time"], 1.0);
    assert_eq!(s.metrics["collision_point"], 0.0);
    assert!(s.pass, "{:?}", s.checks);
    let csv = std::fs::read(dir.path().join("burgers_ref.csv")).unwrap();
    assert_eq!(read_trajectory_csv(csv.as_slice()).unwrap().len(), 51 * cfg.reference.times.len());
    let back = read_summary_json(&dir.path().join("summary.json")).unwrap();
    assert_eq!(back.metrics, s.metrics);
    assert_eq!(back.checks, s.checks);
    assert_eq!(back.exports.len(), 2);
    // every check appears once
    let mut names: Vec<&str> = s.checks.iter().map(|c| c.name.as_str()).collect();
    names.dedup();
    assert_eq!(names.len(), s.checks.len());
}

#[test]
fn single_scenario_fits_the_universal_slope() {
    let mut cfg = ScenarioConfig::for_mode(Mode::Single);
    cfg.solver.nodes_per_side = Some(256);
    let s = run_scenario(&cfg).unwrap();
    assert!(s.pass, "{:?}", s.checks);
    for side in ["left", "right"] {
        let c = s.metrics[&format!("corrector_slope_{side}")];
        assert!((c - 2.0 / PI).abs() < 0.05 * 2.0 / PI, "{side}: {c}");
    }
}

#[test]
fn doubled_profile_breaks_the_h2_cap() {
    let w = tanh_preset(1.2, 1.0, (-8.0, 8.0)).unwrap();
    let coeffs = CorrectorCoeffs::default();
    let mut c = SolverConstants::from_data(&w, coeffs).unwrap();
    c.grid.nodes_per_side = 128;
    let mut sol = outer_solve(&w, coeffs, &c).unwrap();
    let find = |checks: &[Check], n: &str| checks.iter().find(|c| c.name == n).unwrap().clone();
    let ok = check_apriori_single(&sol).unwrap();
    assert!(ok.iter().all(|c| c.passed), "{ok:?}");
    for v in &mut sol.w {
        v.iter_mut().for_each(|x| *x *= 2.0);
    }
    let bad = check_apriori_single(&sol).unwrap();
    let h2 = find(&bad, "h2_cap");
    assert!(!h2.passed && h2.slack < 0.0, "{h2:?}");
}

#[test]
fn two_shock_floors_hold_with_slack() {
    let text = r#"
schema_version = 1
mode = "two_shock"

[data]
preset = "piecewise_constant"
states = [1.0, 0.0, -1.0]
positions = [-0.05, 0.0]

[solver]
nodes_per_side = 96
middle_nodes = 32
m0 = 100.0
"#;
    let cfg = ScenarioConfig::from_toml_str(text).unwrap();
    let s = run_scenario(&cfg).unwrap();
    for name in ["sigma1_floor", "sigma2_floor"] {
        let c = s.checks.iter().find(|c| c.name == name).unwrap();
        assert!(c.passed && c.slack >= 0.0, "{c:?}");
    }
    assert!(s.pass, "{:?}", s.checks);
}
