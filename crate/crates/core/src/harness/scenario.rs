//! Scenario dispatch and run summaries.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checks::{check_apriori_single, check_apriori_two, Check};
use super::config::{Mode, Preset, ScenarioConfig};
use super::crossval::u_profile;
use super::export::{single_rows, two_shock_rows, write_trajectory_csv, TrajectoryRow};
use super::fits::{fit_corrector_slope, log_points};
use crate::correctors::{CorrectorCoeffs, SingleCorrector};
use crate::error::{Error, Result};
use crate::function_core::{jump, PiecewiseRegularFn, Side};
use crate::quadrature::gauss;
use crate::reference::{
    burgers_exact_merged, cell_averages, default_probes, godunov_bh, kruzhkov_residual, FVConfig,
    PiecewiseConstBurgers,
};
use crate::single_shock::{outer_solve, tanh_preset, SingleShockSolution, SolverConstants};
use crate::two_shock::{
    full_interaction_run, handoff, piecewise_constant_frame, solve_two, two_shock_preset, InteractionConstants,
    PhysicalTwoShock, TwoShockConstants,
};

/// One written file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportEntry {
    pub path: PathBuf,
    pub format: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub seed: u64,
    pub wall_time_s: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    /// Named measurements: final norms, strengths, fitted constants.
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub exports: Vec<ExportEntry>,
    /// True only when every check passed.
    pub pass: bool,
}

impl RunSummary {
    fn new(mode: Mode, seed: u64) -> Self {
        Self {
            mode,
            seed,
            wall_time_s: 0.0,
            inner_iterations: 0,
            outer_iterations: 0,
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            exports: Vec::new(),
            pass: true,
        }
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }
}

/// Runs one scenario, writes its exports into the configured directory and
/// returns the summary.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let mut summary = RunSummary::new(cfg.mode, cfg.seed);
    let rows = match cfg.mode {
        Mode::Single => run_single(cfg, &mut summary)?,
        Mode::TwoShock => run_two(cfg, &mut summary)?,
        Mode::Interaction => run_interaction(cfg, &mut summary)?,
        Mode::BurgersRef => run_burgers(cfg, &mut summary)?,
        Mode::FvRef => run_fv(cfg, &mut summary)?,
    };
    summary.wall_time_s = start.elapsed().as_secs_f64();
    summary.pass = summary.checks.iter().all(|c| c.passed);
    if let Some(dir) = &cfg.output.dir {
        std::fs::create_dir_all(dir)?;
        if cfg.output.csv {
            let path = dir.join(format!("{}.csv", cfg.mode.name()));
            write_trajectory_csv(&rows, BufWriter::new(File::create(&path)?))?;
            summary.exports.push(ExportEntry {
                path,
                format: "csv".into(),
                rows: rows.len(),
            });
        }
        if cfg.output.json {
            let path = dir.join("summary.json");
            summary.exports.push(ExportEntry {
                path: path.clone(),
                format: "json".into(),
                rows: 1,
            });
            write_summary_json(&summary, &path)?;
        }
    }
    Ok(summary)
}

pub fn write_summary_json(summary: &RunSummary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_summary_json(path: &Path) -> Result<RunSummary> {
    serde_json::from_reader(BufReader::new(File::open(path)?)).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn load_file(cfg: &ScenarioConfig) -> Result<PiecewiseRegularFn> {
    let path = cfg.data.file.as_ref().ok_or_else(|| Error::Config("data.file is not set".into()))?;
    let f = File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    PiecewiseRegularFn::read_csv(BufReader::new(f))
}

/// Single-shock data of a scenario.
pub fn single_data(cfg: &ScenarioConfig) -> Result<PiecewiseRegularFn> {
    match cfg.preset() {
        Preset::File => load_file(cfg),
        _ => tanh_preset(cfg.data.jump, cfg.norm(), (-8.0, 8.0)),
    }
}

/// Frame data with shocks at τ₀ and 0 for two-shock scenarios.
pub fn two_shock_data(cfg: &ScenarioConfig) -> Result<PiecewiseRegularFn> {
    let d = &cfg.data;
    match cfg.preset() {
        Preset::File => load_file(cfg),
        Preset::PiecewiseConstant => {
            let tau = d.positions[0] - d.positions[1];
            piecewise_constant_frame(d.states[0], d.states[1], d.states[2], tau, (tau - 8.0, 8.0))
        }
        _ => two_shock_preset(d.amplitude, cfg.norm(), d.tau0),
    }
}

fn coeffs_of(cfg: &ScenarioConfig) -> CorrectorCoeffs {
    let d = CorrectorCoeffs::default();
    CorrectorCoeffs {
        c1: cfg.solver.c1.unwrap_or(d.c1),
        c2: cfg.solver.c2.unwrap_or(d.c2),
    }
}

/// Solver constants from the data with the scenario's overrides applied.
pub fn single_constants(cfg: &ScenarioConfig, w_bar: &PiecewiseRegularFn) -> Result<SolverConstants> {
    let s = &cfg.solver;
    let mut c = SolverConstants::from_data(w_bar, coeffs_of(cfg))?;
    if let Some(n) = s.nodes_per_side {
        c.grid.nodes_per_side = n;
    }
    if let Some(t) = s.horizon {
        c = c.with_horizon(t);
    }
    c.allow_long_horizon = s.allow_long_horizon;
    c.m0 = s.m0.unwrap_or(c.m0);
    c.hilbert_scale = s.hilbert_scale.unwrap_or(c.hilbert_scale);
    c.tol_inner = s.tol_inner.unwrap_or(c.tol_inner);
    c.tol_outer = s.tol_outer.unwrap_or(c.tol_outer);
    c.max_inner = s.max_inner.unwrap_or(c.max_inner);
    c.max_outer = s.max_outer.unwrap_or(c.max_outer);
    Ok(c)
}

pub fn two_constants(cfg: &ScenarioConfig) -> TwoShockConstants {
    let s = &cfg.solver;
    let mut c = TwoShockConstants::symmetric_preset();
    if let Some(n) = s.nodes_per_side {
        c.grid.nodes_per_side = n;
    }
    if let Some(n) = s.middle_nodes {
        c.grid.middle_nodes = n;
    }
    c.m0 = s.m0.unwrap_or(c.m0);
    c.delta1 = s.delta1.unwrap_or(c.delta1);
    c.delta2 = s.delta2.unwrap_or(c.delta2);
    c.b = s.b.unwrap_or(c.b);
    c.hilbert_scale = s.hilbert_scale.unwrap_or(c.hilbert_scale);
    c.tol_inner = s.tol_inner.unwrap_or(c.tol_inner);
    c.tol_outer = s.tol_outer.unwrap_or(c.tol_outer);
    c.max_inner = s.max_inner.unwrap_or(c.max_inner);
    c.max_outer = s.max_outer.unwrap_or(c.max_outer);
    c
}

/// Corrector-slope fits on both sides of the shock at one level of a run.
pub fn corrector_slopes(sol: &SingleShockSolution, level: usize) -> Result<(f64, f64)> {
    let u = u_profile(sol, level)?;
    let fit = |side: Side| -> Result<f64> {
        let left = side == Side::Left;
        let samples: Vec<(f64, f64)> = log_points(1e-3, 1e-1, 16, left, !left)
            .into_iter()
            .map(|x| (x, u.eval_side(x, side)))
            .collect();
        Ok(fit_corrector_slope(&samples, u.eval_side(0.0, side))?.coefficient)
    };
    Ok((fit(Side::Left)?, fit(Side::Right)?))
}

fn iterations(summary: &mut RunSummary, report: &crate::single_shock::IterationReport) {
    summary.inner_iterations = report.inner_iterations();
    summary.outer_iterations = report.outer_diff_history.len();
    summary.warnings.extend(report.warnings.iter().cloned());
    summary.metric("fitted_c1", report.fitted_c1);
    summary.metric("clamped_rates", report.clamped_rates as f64);
    if let Some(r) = report.inner_contraction() {
        summary.metric("inner_contraction", r);
        summary.checks.push(Check::at_most("inner_contraction", r, 1.0));
    }
    if let Some(r) = report.outer_contraction() {
        summary.metric("outer_contraction", r);
        summary.checks.push(Check::at_most("outer_contraction", r, 1.0));
    }
}

fn run_single(cfg: &ScenarioConfig, summary: &mut RunSummary) -> Result<Vec<TrajectoryRow>> {
    let w = single_data(cfg)?;
    let c = single_constants(cfg, &w)?;
    let sol = outer_solve(&w, coeffs_of(cfg), &c)?;
    iterations(summary, &sol.report);
    summary.checks.extend(check_apriori_single(&sol)?);
    let last = sol.levels() - 1;
    summary.metric("t_end", sol.times[last]);
    summary.metric("sigma_final", sol.sigma[last]);
    summary.metric("y_final", sol.y_phys[last]);
    summary.metric("m0", c.m0);
    match corrector_slopes(&sol, last) {
        Ok((l, r)) => {
            summary.metric("corrector_slope_left", l);
            summary.metric("corrector_slope_right", r);
        }
        Err(e) => summary.warnings.push(format!("corrector-slope fit skipped: {e}")),
    }
    single_rows(&sol, 0.0, cfg.output.level_stride, cfg.output.node_stride)
}

fn run_two(cfg: &ScenarioConfig, summary: &mut RunSummary) -> Result<Vec<TrajectoryRow>> {
    let w = two_shock_data(cfg)?;
    let sol = solve_two(&w, &two_constants(cfg))?;
    iterations(summary, &sol.report);
    summary.checks.extend(check_apriori_two(&sol)?);
    let h = handoff(&sol)?;
    summary.metric("sigma1_collision", h.sigma1);
    summary.metric("sigma2_collision", h.sigma2);
    summary.metric("merged_jump", h.merged_jump);
    summary.metric("handoff_c1", h.coeffs.c1);
    summary.metric("handoff_c2", h.coeffs.c2);
    summary.metric("t_collision", h.t_collision);
    summary.metric("max_band_slope", sol.max_band_slope);
    let sum = h.sigma1 + h.sigma2;
    summary
        .checks
        .push(Check::at_most("merged_jump_relative_error", (h.merged_jump - sum).abs() / sum, 1e-2));
    two_shock_rows(&sol, cfg.output.level_stride, cfg.output.node_stride)
}

fn run_interaction(cfg: &ScenarioConfig, summary: &mut RunSummary) -> Result<Vec<TrajectoryRow>> {
    let w = two_shock_data(cfg)?;
    let mut c = InteractionConstants {
        two: two_constants(cfg),
        single_horizon: cfg.solver.single_horizon,
        ..Default::default()
    };
    if let Some(n) = cfg.solver.nodes_per_side {
        c.single_grid.nodes_per_side = n;
    }
    let run = full_interaction_run(&PhysicalTwoShock::new(0.0, w)?, &c)?;
    iterations(summary, &run.two.report);
    summary.checks.extend(check_apriori_two(&run.two)?);
    let h = &run.handoff;
    let sum = h.sigma1 + h.sigma2;
    summary
        .checks
        .push(Check::at_most("merged_jump_relative_error", (h.merged_jump - sum).abs() / sum, 1e-2));
    summary
        .checks
        .push(Check::at_most("junction_gap", run.junction_gap(), run.single.grid.finest_step()));
    let monotone = run.path.windows(2).all(|p| p[1].t_phys >= p[0].t_phys);
    summary
        .checks
        .push(Check::at_least("monotone_time", if monotone { 1.0 } else { 0.0 }, 1.0));
    summary.metric("t_collision", h.t_collision);
    summary.metric("y_collision", h.y_collision);
    summary.metric("handoff_c1", h.coeffs.c1);
    summary.metric("handoff_c2", h.coeffs.c2);
    summary.metric("merged_jump", h.merged_jump);
    let mut rows = two_shock_rows(&run.two, cfg.output.level_stride, cfg.output.node_stride)?;
    rows.extend(single_rows(&run.single, h.t_collision, cfg.output.level_stride, cfg.output.node_stride)?);
    Ok(rows)
}

fn run_burgers(cfg: &ScenarioConfig, summary: &mut RunSummary) -> Result<Vec<TrajectoryRow>> {
    let d = &cfg.data;
    let (ul, um, ur) = (d.states[0], d.states[1], d.states[2]);
    let pc = PiecewiseConstBurgers::new(ul, um, ur, d.positions[0], d.positions[1])?;
    let tc = pc.collision_time();
    summary.metric("collision_time", tc);
    summary.metric("collision_point", pc.collision_point());
    summary.metric("sigma1", pc.sigma1());
    summary.metric("sigma2", pc.sigma2());
    // mass over a window containing every shock changes by the boundary flux only
    let t_max = cfg.reference.times.iter().copied().fold(0.0, f64::max);
    let reach = (ul.abs().max(ur.abs()) + 1.0) * t_max;
    let (a, b) = (d.positions[0] - 4.0 - reach, d.positions[1] + 4.0 + reach);
    let mass = |t: f64| -> f64 {
        let mut cuts = vec![a, b];
        if t < tc {
            cuts.extend([pc.x1(t), pc.x2(t)]);
        } else {
            cuts.push(pc.merged_position(t));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2).map(|w| gauss(|x| burgers_exact_merged(&pc, t, x), w[0], w[1], 4)).sum()
    };
    let m0 = mass(0.0);
    let mut drift = 0.0f64;
    let mut rows = Vec::new();
    let n = cfg.reference.samples;
    for &t in &cfg.reference.times {
        let expected = m0 + t * 0.5 * (ul * ul - ur * ur);
        drift = drift.max((mass(t) - expected).abs());
        let (y1, y2) = if t < tc { (pc.x1(t), pc.x2(t)) } else { (pc.merged_position(t), pc.merged_position(t)) };
        let (s1, s2) = if t < tc { (pc.sigma1(), Some(pc.sigma2())) } else { (ul - ur, None) };
        for k in 0..n {
            let x = a + (b - a) * k as f64 / (n - 1) as f64;
            let u = burgers_exact_merged(&pc, t, x);
            rows.push(TrajectoryRow {
                t_frame: if t < tc { y1 - y2 } else { 0.0 },
                t_phys: t,
                x,
                w: u,
                phi: 0.0,
                u,
                sigma1: s1,
                sigma2: s2,
                y1,
                y2: Some(y2),
            });
        }
    }
    summary.checks.push(Check::at_most("mass_balance", drift, 1e-12 * (1.0 + m0.abs())));
    Ok(rows)
}

fn run_fv(cfg: &ScenarioConfig, summary: &mut RunSummary) -> Result<Vec<TrajectoryRow>> {
    let f = &cfg.fv;
    let fv = FVConfig {
        cells: f.cells,
        cfl: f.cfl,
        window: (-f.half_width, f.half_width),
        t_end: f.t_end,
        hilbert_scale: cfg.solver.hilbert_scale.unwrap_or(1.0),
        splitting: f.splitting,
        ..FVConfig::default()
    };
    let d = &cfg.data;
    let u0 = match cfg.preset() {
        Preset::PiecewiseConstant => {
            let (s, p) = (d.states.clone(), d.positions.clone());
            cell_averages(&fv, move |x| s[p.partition_point(|&b| b <= x)])
        }
        _ => {
            let w = single_data(cfg)?;
            let corr = SingleCorrector::new(coeffs_of(cfg), jump(&w, 0.0)?, 0.0, 0.0)?;
            let eps = fv.hilbert_scale;
            cell_averages(&fv, move |x| {
                let side = if x < 0.0 { Side::Left } else { Side::Right };
                w.eval_side(x, side) + if x == 0.0 { 0.0 } else { eps * corr.value(x) }
            })
        }
    };
    let traj = godunov_bh(&u0, &fv)?;
    let n = traj.times.len();
    summary.outer_iterations = n - 1;
    let mass_drift = traj.mass.iter().map(|m| (m - traj.mass[0]).abs()).fold(0.0, f64::max);
    summary.metric("mass_drift", mass_drift);
    summary.metric("steps", (n - 1) as f64);
    let umin = u0.iter().copied().fold(f64::INFINITY, f64::min);
    let umax = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let probes = default_probes((0.0, fv.t_end), (-1.0, 1.0), (umin, umax));
    let res = kruzhkov_residual(&traj.entropy_samples(), &probes);
    let worst = res.iter().copied().fold(f64::INFINITY, f64::min);
    summary.metric("kruzhkov_min", worst);
    summary.checks.push(Check::at_least("kruzhkov_residual", worst, -1e-3));
    let centers = fv.centers();
    let stride = cfg.output.node_stride;
    let mut rows = Vec::new();
    for (k, (&t, u)) in traj.times.iter().zip(&traj.u).enumerate() {
        if k % cfg.output.level_stride != 0 && k + 1 != n {
            continue;
        }
        for (i, (&x, &v)) in centers.iter().zip(u).enumerate().step_by(stride) {
            let _ = i;
            rows.push(TrajectoryRow {
                t_frame: t,
                t_phys: t,
                x,
                w: v,
                phi: 0.0,
                u: v,
                sigma1: 0.0,
                sigma2: None,
                y1: 0.0,
                y2: None,
            });
        }
    }
    Ok(rows)
}
