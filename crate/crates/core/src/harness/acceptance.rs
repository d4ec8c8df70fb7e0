//! The ten acceptance criteria, each reduced to a PASS/FAIL outcome with the
//! measured numbers attached.

use std::f64::consts::{E, PI};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::crossval::{fv_initial, l1_single_vs_fv, single_space_time_samples};
use super::fits::{envelope_fit, Envelope};
use super::scenario::corrector_slopes;
use crate::correctors::CorrectorCoeffs;
use crate::error::{Error, Result};
use crate::function_core::{
    hilbert_gb, hilbert_l2_norm, hilbert_piecewise, hilbert_pv, GridFn1D, PiecewiseRegularFn, DEFAULT_WINDOW,
};
use crate::reference::{
    cell_averages, default_probes, godunov_bh, i_integral_closed, i_integral_quadrature, kruzhkov_residual,
    FVConfig, FVTrajectory, PiecewiseConstBurgers, SpaceTimeSamples,
};
use crate::single_shock::{outer_solve, tanh_preset, SingleShockSolution, SolverConstants};
use crate::two_shock::{
    full_interaction_run, solve_two, two_shock_preset, InteractionConstants, InteractionRun, PhysicalTwoShock,
    TwoShockConstants, TwoShockSolution, PRESET_TAU0,
};

pub const DEFAULT_SEED: u64 = 20_240_501;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    /// One report line: `PASS 4 single-shock contraction: ...`.
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

pub const TITLES: [&str; 10] = [
    "Hilbert isometry",
    "piecewise vs principal-value transform",
    "H[g_b] derivative envelopes",
    "single-shock contraction",
    "corrector universality",
    "single-shock vs Godunov",
    "I-integral closed form vs quadrature",
    "two-shock preset run",
    "interaction stitching",
    "entropy residuals",
];

fn sfmt(e: &impl std::fmt::Display) -> String {
    e.to_string()
}

/// Shared runs, computed on first use.
pub struct Acceptance {
    pub seed: u64,
    single_preset: OnceLock<std::result::Result<(SingleShockSolution, SingleShockSolution, f64), String>>,
    crossval: OnceLock<std::result::Result<Vec<CrossvalRun>, String>>,
    two_shock: OnceLock<std::result::Result<(TwoShockSolution, f64), String>>,
}

/// The single-shock solver and Godunov on the same data up to t = 0.05.
pub struct CrossvalRun {
    pub nodes: usize,
    pub cells: usize,
    pub solver: SingleShockSolution,
    pub fv: FVTrajectory,
    pub l1: f64,
}

/// M₀ of the single-shock preset at the default horizon.
pub const PRESET_M0: f64 = 2.0;
/// Cap used where a run extends past the admissible horizon; the H² norm of
/// the preset data exceeds 2 there.
pub const RAISED_M0: f64 = 4.0;
pub const CROSSVAL_T: f64 = 0.05;

pub fn single_preset_data() -> Result<PiecewiseRegularFn> {
    tanh_preset(1.2, 1.0, DEFAULT_WINDOW)
}

pub fn two_shock_preset_data() -> Result<PiecewiseRegularFn> {
    two_shock_preset(1.0, 1.6, PRESET_TAU0)
}

fn smooth_bump(x: f64, c: f64, w: f64) -> f64 {
    let q = (x - c) / w;
    if q.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - q * q)).exp()
    }
}

fn timed(id: u8, f: impl FnOnce() -> std::result::Result<(bool, String), String>) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        title: TITLES[id as usize - 1].to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

impl Acceptance {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            single_preset: OnceLock::new(),
            crossval: OnceLock::new(),
            two_shock: OnceLock::new(),
        }
    }

    pub fn run(&self, id: u8) -> CriterionOutcome {
        match id {
            1 => timed(1, || self.isometry()),
            2 => timed(2, || self.formula_equivalence()),
            3 => timed(3, || self.gb_envelopes()),
            4 => timed(4, || self.single_contraction()),
            5 => timed(5, || self.corrector_universality()),
            6 => timed(6, || self.crossvalidation()),
            7 => timed(7, || self.i_integral_oracle()),
            8 => timed(8, || self.two_shock_run()),
            9 => timed(9, || self.interaction()),
            10 => timed(10, || self.entropy()),
            _ => CriterionOutcome {
                id,
                title: "unknown".into(),
                passed: false,
                detail: format!("no criterion {id}"),
                seconds: 0.0,
            },
        }
    }

    pub fn run_all(&self) -> Vec<CriterionOutcome> {
        (1..=10).map(|id| self.run(id)).collect()
    }

    fn isometry(&self) -> std::result::Result<(bool, String), String> {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..20 {
            let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=3))
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.5..2.5)))
                .collect();
            let f = GridFn1D::sample(DEFAULT_WINDOW, 4096, |x| {
                bumps.iter().map(|&(a, c, w)| a * smooth_bump(x, c, w)).sum()
            })
            .map_err(|e| sfmt(&e))?;
            let ratio = hilbert_l2_norm(&f).map_err(|e| sfmt(&e))? / f.l2_norm_sq().sqrt();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let secs = start.elapsed().as_secs_f64();
        Ok((
            lo >= 0.99 && hi <= 1.01 && secs < 30.0,
            format!("ratios in [{lo:.5}, {hi:.5}], need [0.99, 1.01]; {secs:.1} s (limit 30); seed {}", self.seed),
        ))
    }

    fn formula_equivalence(&self) -> std::result::Result<(bool, String), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x2);
        let (mut cases, mut points, mut worst) = (0, 0, 0.0f64);
        while cases < 20 {
            let n_jumps = 1 + cases % 3;
            let mut bps: Vec<f64> = (0..n_jumps).map(|_| rng.gen_range(-2.5..2.5)).collect();
            bps.sort_by(f64::total_cmp);
            if bps.windows(2).any(|w| w[1] - w[0] < 0.3) {
                continue;
            }
            let coeffs: Vec<[f64; 4]> = (0..=n_jumps)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.1..0.1),
                    ]
                })
                .collect();
            let f = PiecewiseRegularFn::from_fn((-4.0, 4.0), bps.clone(), 41, |p, x| {
                let c = coeffs[p];
                c[0] + x * (c[1] + x * (c[2] + x * c[3]))
            })
            .map_err(|e| sfmt(&e))?;
            cases += 1;
            let mut taken = 0;
            while taken < 5 {
                let x: f64 = rng.gen_range(-3.9..3.9);
                if bps.iter().any(|b| (x - b).abs() < 0.05) {
                    continue;
                }
                taken += 1;
                let a = hilbert_piecewise(&f, x).map_err(|e| sfmt(&e))?;
                let b = hilbert_pv(&f, x).map_err(|e| sfmt(&e))?;
                // relative to |H[f](x)|, floored at 10⁻³ where the transform crosses zero
                worst = worst.max((a - b).abs() / b.abs().max(1e-3));
                points += 1;
            }
        }
        Ok((
            worst <= 1e-3,
            format!("{cases} functions, {points} points, max relative error {worst:.2e} (limit 1e-3); seed {}", self.seed),
        ))
    }

    fn gb_envelopes(&self) -> std::result::Result<(bool, String), String> {
        let envelopes = [Envelope::Constant, Envelope::LnSquared, Envelope::LnOverX, Envelope::LnOverXSquared];
        let hi = 1.0 / (2.0 * E);
        let mut all = true;
        let mut worst_growth = 0.0f64;
        let mut failures = Vec::new();
        for b in [0.0, 1e-3, 1e-1, hi] {
            for (k, env) in envelopes.into_iter().enumerate() {
                let fit = envelope_fit(env, |x| hilbert_gb(b, x, k), 1e-4, hi, 24).map_err(|e| sfmt(&e))?;
                let growth = fit.refined_max_ratio.unwrap_or(fit.max_ratio) / fit.max_ratio;
                worst_growth = worst_growth.max(growth);
                if !fit.bounded {
                    all = false;
                    failures.push(format!("b={b} k={k} growth {growth:.3}"));
                }
            }
        }
        Ok((
            all,
            format!(
                "16 fits, worst max-ratio growth under 2x sampling {worst_growth:.4} (limit 1.2){}",
                if failures.is_empty() { String::new() } else { format!("; unbounded: {}", failures.join(", ")) }
            ),
        ))
    }

    /// Preset runs at T and T/2 with 1024 nodes per side, plus their wall time.
    pub fn single_preset_runs(&self) -> std::result::Result<&(SingleShockSolution, SingleShockSolution, f64), String> {
        self.single_preset
            .get_or_init(|| {
                let start = Instant::now();
                let w = single_preset_data().map_err(|e| sfmt(&e))?;
                let coeffs = CorrectorCoeffs::default();
                let mut c = SolverConstants::from_data(&w, coeffs).map_err(|e| sfmt(&e))?;
                c.m0 = PRESET_M0;
                c.grid.nodes_per_side = 1024;
                let full = outer_solve(&w, coeffs, &c).map_err(|e| sfmt(&e))?;
                let half = outer_solve(&w, coeffs, &c.clone().with_horizon(0.5 * c.t_end)).map_err(|e| sfmt(&e))?;
                Ok((full, half, start.elapsed().as_secs_f64()))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn single_contraction(&self) -> std::result::Result<(bool, String), String> {
        let (full, half, secs) = self.single_preset_runs()?;
        let ratios = |s: &SingleShockSolution| {
            (
                s.report.inner_contraction().unwrap_or(f64::INFINITY),
                s.report.outer_contraction().unwrap_or(f64::INFINITY),
            )
        };
        let (i1, o1) = ratios(full);
        let (i2, o2) = ratios(half);
        let ok = i1 < 1.0 && o1 < 1.0 && i2 < i1 && o2 < o1 && *secs < 300.0;
        Ok((
            ok,
            format!(
                "T = {:.3e}: inner {i1:.3e} outer {o1:.3e}; T/2: inner {i2:.3e} outer {o2:.3e}; both runs {secs:.1} s (limit 300)",
                full.constants.t_end
            ),
        ))
    }

    fn corrector_universality(&self) -> std::result::Result<(bool, String), String> {
        let (full, _, _) = self.single_preset_runs()?;
        let t_end = full.constants.t_end;
        let target = 2.0 / PI;
        let (mut lo, mut hi, mut levels) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        for k in 0..full.levels() {
            if full.times[k] < 0.5 * t_end {
                continue;
            }
            let (l, r) = corrector_slopes(full, k).map_err(|e| sfmt(&e))?;
            lo = lo.min(l.min(r));
            hi = hi.max(l.max(r));
            levels += 1;
        }
        let ok = levels > 0 && lo >= 0.85 * target && hi <= 1.15 * target;
        Ok((
            ok,
            format!("{levels} levels on [T/2, T]: fitted slopes in [{lo:.5}, {hi:.5}], need 2/π ± 15% = [{:.5}, {:.5}]", 0.85 * target, 1.15 * target),
        ))
    }

    /// Solver and Godunov runs at 512/1024 and 1024/2048 resolution.
    pub fn crossval_runs(&self) -> std::result::Result<&Vec<CrossvalRun>, String> {
        self.crossval
            .get_or_init(|| {
                let w = single_preset_data().map_err(|e| sfmt(&e))?;
                let coeffs = CorrectorCoeffs::default();
                [(512, 1024), (1024, 2048)]
                    .into_iter()
                    .map(|(nodes, cells)| {
                        let mut c = SolverConstants::from_data(&w, coeffs)?.with_horizon(CROSSVAL_T);
                        c.allow_long_horizon = true;
                        c.m0 = RAISED_M0;
                        c.grid.nodes_per_side = nodes;
                        let solver = outer_solve(&w, coeffs, &c)?;
                        let cfg = FVConfig {
                            cells,
                            t_end: CROSSVAL_T,
                            ..FVConfig::default()
                        };
                        let fv = godunov_bh(&fv_initial(&solver, 0, &cfg)?, &cfg)?;
                        let l1 = l1_single_vs_fv(&solver, solver.levels() - 1, &fv, fv.times.len() - 1, (-1.0, 1.0))?;
                        Ok(CrossvalRun {
                            nodes,
                            cells,
                            solver,
                            fv,
                            l1,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| sfmt(&e))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn crossvalidation(&self) -> std::result::Result<(bool, String), String> {
        let runs = self.crossval_runs()?;
        let (coarse, fine) = (&runs[0], &runs[1]);
        Ok((
            fine.l1 < 5e-2 && fine.l1 < coarse.l1,
            format!(
                "L1[-1,1] at t = {CROSSVAL_T}: {:.3e} at {}/{}, {:.3e} at {}/{} (limit 5e-2, decreasing); M0 = {RAISED_M0}",
                coarse.l1, coarse.nodes, coarse.cells, fine.l1, fine.nodes, fine.cells
            ),
        ))
    }

    fn i_integral_oracle(&self) -> std::result::Result<(bool, String), String> {
        let pc = PiecewiseConstBurgers::new(2.0, 0.0, -2.0, -1.0, 1.0).map_err(|e| sfmt(&e))?;
        let mut ok = true;
        let mut notes = Vec::new();
        for tau in [0.25, 0.5] {
            let rem = |y: f64| -> Result<f64> { Ok(i_integral_quadrature(&pc, tau, y)? - i_integral_closed(&pc, tau, y)?) };
            let (x1, x2) = (pc.x1(tau), pc.x2(tau));
            let far = |n: usize| -> Vec<f64> {
                (0..=n)
                    .map(|k| -4.0 + 8.0 * k as f64 / n as f64)
                    .filter(|&y| (y - x1).abs() >= 0.1 && (y - x2).abs() >= 0.1)
                    .collect()
            };
            // remainder values and centred differences at two sample densities and two steps
            let mut value = [0.0f64; 2];
            let mut slope = [0.0f64; 2];
            for (j, (n, h)) in [(60, 2e-3), (120, 1e-3)].into_iter().enumerate() {
                for y in far(n) {
                    value[j] = value[j].max(rem(y).map_err(|e| sfmt(&e))?.abs());
                    let d = (rem(y + h).map_err(|e| sfmt(&e))? - rem(y - h).map_err(|e| sfmt(&e))?) / (2.0 * h);
                    slope[j] = slope[j].max(d.abs());
                }
            }
            let stable = (value[1] - value[0]).abs() <= 0.2 * value[0] && (slope[1] - slope[0]).abs() <= 0.2 * slope[0];
            // each term's y-slope grows by (2/π)·ln 10 per decade toward a shock
            let mut rate_err = 0.0f64;
            for (x, side) in [(x1, -1.0), (x1, 1.0), (x2, -1.0), (x2, 1.0)] {
                for f in [i_integral_closed, i_integral_quadrature] {
                    let s: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
                        .iter()
                        .map(|&d| -> Result<f64> {
                            let (y, h) = (x + side * d, 0.01 * d);
                            Ok((f(&pc, tau, y + h)? - f(&pc, tau, y - h)?) / (2.0 * h))
                        })
                        .collect::<Result<_>>()
                        .map_err(|e| sfmt(&e))?;
                    for w in s.windows(2) {
                        let rate = (w[1] - w[0]).abs() / 10f64.ln();
                        rate_err = rate_err.max((rate / (2.0 / PI) - 1.0).abs());
                    }
                }
            }
            let diverges = rate_err < 0.03;
            ok &= stable && diverges;
            notes.push(format!(
                "τ={tau}: |rem| {:.3}/{:.3}, |rem'| {:.3}/{:.3}, log-rate error {rate_err:.2e}",
                value[0], value[1], slope[0], slope[1]
            ));
        }
        Ok((ok, notes.join("; ")))
    }

    /// The two-shock preset with M₀ raised, and its wall time.
    pub fn two_shock_raised(&self) -> std::result::Result<&(TwoShockSolution, f64), String> {
        self.two_shock
            .get_or_init(|| {
                let start = Instant::now();
                let w = two_shock_preset_data().map_err(|e| sfmt(&e))?;
                let mut c = TwoShockConstants::symmetric_preset();
                c.m0 = RAISED_M0;
                let sol = solve_two(&w, &c).map_err(|e| sfmt(&e))?;
                Ok((sol, start.elapsed().as_secs_f64()))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn two_shock_run(&self) -> std::result::Result<(bool, String), String> {
        let w = two_shock_preset_data().map_err(|e| sfmt(&e))?;
        let c = TwoShockConstants::symmetric_preset();
        let m0 = c.m0;
        let strict = match solve_two(&w, &c) {
            Ok(_) => "completes".to_string(),
            Err(e) => format!("stops: {}", e.root()),
        };
        let strict_ok = strict == "completes";
        let (sol, secs) = self.two_shock_raised()?;
        let mut floors = true;
        let (mut h2, mut pinch) = (0.0f64, 0.0f64);
        for k in 0..sol.levels() {
            let s = sol.strengths[k];
            floors &= s.sigma1 >= c.delta1 && s.sigma2 >= c.delta2;
            let tau = sol.times[k];
            h2 = h2.max(sol.grid.norm(&sol.w[k], tau, 2).map_err(|e| sfmt(&e))?);
            if tau != 0.0 {
                pinch = pinch.max(sol.pinching(k) / tau.abs().sqrt());
            }
        }
        let inner = sol.report.inner_contraction().unwrap_or(f64::INFINITY);
        let ok = strict_ok && floors && h2 <= m0 && pinch <= m0 && inner < 1.0 && *secs < 600.0;
        Ok((
            ok,
            format!(
                "M0 = {m0} run {strict}; with M0 = {RAISED_M0}: floors {}, max H2 {h2:.3} (cap {m0}), max pinching/sqrt|t| {pinch:.3} (cap {m0}), inner contraction {inner:.3e}, {secs:.1} s",
                if floors { "hold" } else { "violated" }
            ),
        ))
    }

    fn interaction(&self) -> std::result::Result<(bool, String), String> {
        let w = two_shock_preset_data().map_err(|e| sfmt(&e))?;
        let mut c = InteractionConstants::default();
        c.two.m0 = RAISED_M0;
        let run: InteractionRun =
            full_interaction_run(&PhysicalTwoShock::new(0.0, w).map_err(|e| sfmt(&e))?, &c).map_err(|e| sfmt(&e))?;
        let h = &run.handoff;
        let gap = run.junction_gap();
        let step = run.single.grid.finest_step();
        let sum = h.sigma1 + h.sigma2;
        let merged = (h.merged_jump - sum).abs() / sum;
        let target = 4.0 / 3.0;
        let coeff_err = ((h.coeffs.c1 - target).abs()).max((h.coeffs.c2 - target).abs()) / target;
        let ok = gap < step && merged <= 1e-2 && coeff_err <= 1e-2;
        Ok((
            ok,
            format!(
                "junction gap {gap:.2e} (step {step:.2e}); merged jump error {merged:.2e} (limit 1e-2); handoff (c1, c2) = ({:.4}, {:.4}) from strengths ({:.4}, {:.4}), relative error to 4/3 {coeff_err:.3} (limit 1e-2)",
                h.coeffs.c1, h.coeffs.c2, h.sigma1, h.sigma2
            ),
        ))
    }

    fn entropy(&self) -> std::result::Result<(bool, String), String> {
        let err = |e: Error| sfmt(&e);
        let runs = self.crossval_runs()?;
        let run = &runs[1];
        let x_box = (-1.0, 1.0);
        let t_box = (0.0, CROSSVAL_T);
        let levels: Vec<usize> = (0..run.solver.levels()).collect();
        let solver_samples = single_space_time_samples(&run.solver, &levels, x_box, 201, 8).map_err(err)?;
        let range = |s: &SpaceTimeSamples| {
            s.levels.iter().flatten().flat_map(|p| p.u.iter()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| {
                (a.min(u), b.max(u))
            })
        };
        let min_res = |s: &SpaceTimeSamples, t_box: (f64, f64), x_box: (f64, f64)| {
            kruzhkov_residual(s, &default_probes(t_box, x_box, range(s))).into_iter().fold(f64::INFINITY, f64::min)
        };
        let solver = min_res(&solver_samples, t_box, x_box);
        let fv_single = min_res(&run.fv.entropy_samples(), t_box, x_box);
        // Godunov on the two-shock preset through the collision near t = 0.05
        let w2 = two_shock_preset_data().map_err(err)?;
        let cfg = FVConfig {
            cells: 2048,
            t_end: 2.0 * CROSSVAL_T,
            ..FVConfig::default()
        };
        let u0 = cell_averages(&cfg, |x| w2.eval(x));
        let fv_two = min_res(&godunov_bh(&u0, &cfg).map_err(err)?.entropy_samples(), (0.0, cfg.t_end), x_box);
        // a stationary rising jump violates the inequality
        let times: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let planted = SpaceTimeSamples::from_fn(
            &times,
            |_| vec![-2.0, 0.0, 2.0],
            3,
            |_, p, _| if p == 0 { -1.0 } else { 1.0 },
            |_, _, _| 0.0,
        );
        let planted_min = min_res(&planted, (0.0, 1.0), (-1.0, 1.0));
        let ok = solver >= -1e-3 && fv_single >= -1e-3 && fv_two >= -1e-3 && planted_min < -1e-3;
        Ok((
            ok,
            format!(
                "min residual: solver {solver:.2e}, Godunov on the same data {fv_single:.2e}, Godunov on the two-shock preset {fv_two:.2e} (limit -1e-3); planted rising jump {planted_min:.2e} (flagged below -1e-3)"
            ),
        ))
    }
}
