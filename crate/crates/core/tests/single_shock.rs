use std::f64::consts::{E, PI};

use bh_core::correctors::{phi0_dx, CorrectorCoeffs};
use bh_core::error::Error;
use bh_core::function_core::{sobolev_norm, PiecewiseRegularFn, Side, DEFAULT_WINDOW};
use bh_core::single_shock::*;
use proptest::prelude::*;

fn step(lo: f64, hi: f64, window: (f64, f64)) -> PiecewiseRegularFn {
    PiecewiseRegularFn::from_fn(window, vec![0.0], 64, |p, _| if p == 0 { lo } else { hi }).unwrap()
}

fn preset() -> PiecewiseRegularFn {
    tanh_preset(1.2, 1.0, DEFAULT_WINDOW).unwrap()
}

#[test]
fn speed_is_half_jump_next_to_the_shock() {
    let state = SingleShockState::new(0.0, step(1.0, -1.0, DEFAULT_WINDOW), 0.0, 0.0, CorrectorCoeffs::default()).unwrap();
    assert!((speed_single(&state, -1e-12).unwrap() - 1.0).abs() < 1e-9);
    assert!((speed_single(&state, 1e-12).unwrap() + 1.0).abs() < 1e-9);
    assert!(matches!(speed_single(&state, 0.0), Err(Error::SingularEvaluation(_))));
}

#[test]
fn speed_bounds_near_the_shock_on_the_preset() {
    let w = preset();
    let c = SolverConstants::from_data(&w, CorrectorCoeffs::default()).unwrap();
    let state = SingleShockState::new(0.0, w, 0.0, 0.0, CorrectorCoeffs::default()).unwrap();
    for k in 1..=40 {
        let x = 2.0 * c.delta1 * k as f64 / 40.0;
        let right = speed_single(&state, x).unwrap();
        let left = speed_single(&state, -x).unwrap();
        assert!((-5.0 * c.delta0..=-c.delta0).contains(&right), "{x} {right}");
        assert!((c.delta0..=5.0 * c.delta0).contains(&left), "{x} {left}");
    }
}

#[test]
fn preset_constants() {
    let w = preset();
    assert!((sobolev_norm(&w, 2, &[]).unwrap().total - 1.0).abs() < 1e-10);
    let c = SolverConstants::from_data(&w, CorrectorCoeffs::default()).unwrap();
    assert!((c.m0 - 2.0).abs() < 1e-9);
    assert!((c.delta0 - 0.2).abs() < 1e-12);
    // ¼(0.2/8)²
    assert!((c.delta1 - 1.5625e-4).abs() < 1e-12);
    // ½·min{δ₁/(10δ₀), 1/(2e), 1/(8e)}
    let t = 0.5 * (1.5625e-4f64 / 2.0).min(1.0 / (2.0 * E)).min(1.0 / (8.0 * E));
    assert!((c.t_end - t).abs() < 1e-12 * t);
}

#[test]
fn unit_coefficients_have_no_offset_part() {
    let w = preset();
    let state = SingleShockState::new(0.01, w, 0.3, 0.0, CorrectorCoeffs::default()).unwrap();
    for x in [-0.5, -1e-3, 2e-4, 0.3, 1.7] {
        assert_eq!(assemble_f_single(&state, x).unwrap().c, 0.0);
    }
}

#[test]
fn slope_term_on_piecewise_constant_data() {
    // w = 1 on [−8, 0), −0.5 on (0, 8]: H[w] from the three jumps in closed form
    let (lo, hi) = (1.0, -0.5);
    let state = SingleShockState::new(0.01, step(lo, hi, DEFAULT_WINDOW), 0.0, 0.0, CorrectorCoeffs::default()).unwrap();
    let avg = 0.5 * (lo + hi);
    for x in [-3.0, -0.4, -1e-3, 5e-4, 0.2, 2.5] {
        let hw = (lo * (x + 8.0f64).abs().ln() + (hi - lo) * x.abs().ln() - hi * (x - 8.0f64).abs().ln()) / PI;
        let w = if x < 0.0 { lo } else { hi };
        let b = assemble_f_single(&state, x).unwrap().b;
        let expected = hw - (w - avg) * phi0_dx(x);
        assert!((b - expected).abs() < 1e-7, "{x}: {b} vs {expected}");
    }
}

#[test]
fn grid_and_spline_sources_agree() {
    let w_bar = preset();
    let grid = SpaceGrid::graded(&GridSpec::default()).unwrap();
    let values: Vec<f64> = (0..grid.len())
        .map(|i| w_bar.eval_side(grid.x(i), grid.side(i)))
        .collect();
    let profile = grid.profile(&values).unwrap();
    for coeffs in [CorrectorCoeffs::default(), CorrectorCoeffs { c1: 1.5, c2: 0.7 }] {
        let (t, sdot) = (0.02, -0.4);
        let f = source_on_grid(&grid, &values, t, sdot, coeffs, 1.0).unwrap();
        let state = SingleShockState::new(t, profile.clone(), sdot, 0.0, coeffs).unwrap();
        let mut worst = 0.0f64;
        for i in (3..grid.len() - 3).step_by(17) {
            let x = grid.x(i);
            if x == 0.0 || x.abs() > 7.5 {
                continue;
            }
            let direct = assemble_f_single(&state, x).unwrap().total(1.0);
            worst = worst.max((direct - f[i]).abs());
        }
        assert!(worst < 2e-4, "{coeffs:?}: {worst}");
    }
}

proptest! {
    #[test]
    fn trapezoid_path_of_constant_traces(um in -2.0f64..2.0, up in -2.0f64..2.0, y0 in -1.0f64..1.0) {
        let times = [0.0, 0.1, 0.25, 0.7];
        let y = recover_shock_position(&times, &[um; 4], &[up; 4], y0);
        for (t, v) in times.iter().zip(&y) {
            prop_assert!((v - (y0 + 0.5 * (um + up) * t)).abs() < 1e-14);
        }
    }
}

#[test]
fn shock_path_examples() {
    let times = [0.0, 0.5, 1.0];
    assert_eq!(recover_shock_position(&times, &[1.0; 3], &[-1.0; 3], 0.3), vec![0.3; 3]);
    let y = recover_shock_position(&times, &[2.0; 3], &[0.0; 3], 0.0);
    assert!((y[2] - 1.0).abs() < 1e-15);
}

#[test]
fn plain_burgers_shock_moves_at_the_average() {
    let (ul, ur) = (1.5, -0.5);
    let w = step(ul, ur, DEFAULT_WINDOW);
    let mut c = SolverConstants::from_data(&w, CorrectorCoeffs::default()).unwrap().with_horizon(0.15);
    c.hilbert_scale = 0.0;
    c.allow_long_horizon = true;
    c.grid.nodes_per_side = 128;
    let sol = outer_solve(&w, CorrectorCoeffs::default(), &c).unwrap();
    let mut worst = 0.0f64;
    for k in 1..sol.levels() {
        let ydot = (sol.y_phys[k] - sol.y_phys[k - 1]) / (sol.times[k] - sol.times[k - 1]);
        let (a, b) = sol.grid.traces(&sol.w[k]);
        worst = worst.max((ydot - 0.5 * (a + b)).abs());
    }
    assert!(worst < 1e-3, "{worst}");
    assert!((sol.y_phys.last().unwrap() - 0.5 * (ul + ur) * 0.15).abs() < 1e-12);
}

#[test]
fn long_horizon_needs_opt_in() {
    let w = preset();
    let c = SolverConstants::from_data(&w, CorrectorCoeffs::default()).unwrap().with_horizon(0.05);
    assert!(matches!(outer_solve(&w, CorrectorCoeffs::default(), &c), Err(Error::Regime(_))));
}

#[test]
fn nonentropic_data_is_rejected() {
    let w = step(-1.0, 1.0, DEFAULT_WINDOW);
    assert!(matches!(
        SolverConstants::from_data(&w, CorrectorCoeffs::default()),
        Err(Error::Entropy(_))
    ));
}

#[test]
fn preset_run_contracts_and_satisfies_its_identity() {
    let w = preset();
    let coeffs = CorrectorCoeffs::default();
    let c = SolverConstants::from_data(&w, coeffs).unwrap();
    let sol = outer_solve(&w, coeffs, &c).unwrap();
    let r = &sol.report;
    assert!(r.converged);
    let inner = r.inner_contraction().unwrap();
    let outer = r.outer_contraction().unwrap();
    assert!(inner < 1.0 && outer <= 0.5, "{inner} {outer}");
    assert!(sol.sigma.iter().all(|&s| s > 0.0));
    // a-priori bounds at the final iterate
    let (l0, r0) = sol.grid.traces(&sol.w[0]);
    for (j, v) in sol.w.iter().enumerate() {
        let (l, r) = sol.grid.traces(v);
        assert!((l - l0).abs() <= c.delta0 && (r - r0).abs() <= c.delta0);
        assert!(sobolev_norm(&sol.profile(j).unwrap(), 2, &[]).unwrap().total <= c.m0);
    }
    // σ̇ envelope with the fitted constant
    let c1 = r.fitted_c1;
    for k in 1..sol.levels() {
        let (t1, t2) = (sol.times[k - 1].max(sol.times[1]), sol.times[k]);
        let cap = 4.0 * c1 * (1.0 + c.m0) * t1.ln().abs() * (t2 - sol.times[k - 1]);
        assert!((sol.sigma[k] - sol.sigma[k - 1]).abs() <= cap, "level {k}");
    }
    let id = sol.integral_identity(4, 4).unwrap();
    assert!(id.checked > 100);
    assert!(id.max_error < 1e-6, "{id:?}");
}

#[test]
fn source_stays_inside_its_envelope() {
    let w = preset();
    let coeffs = CorrectorCoeffs::default();
    let mut c = SolverConstants::from_data(&w, coeffs).unwrap().with_horizon(0.02);
    c.allow_long_horizon = true;
    let sol = outer_solve(&w, coeffs, &c).unwrap();
    let k = sol.times.iter().position(|&t| t >= 0.01).unwrap();
    let state = sol.state(k).unwrap();
    let c1 = sol.report.fitted_c1;
    for x in [-1e-3, 1e-3] {
        let f = assemble_f_single(&state, x).unwrap().total(1.0).abs();
        let env = c1 * ((1.0 + c.m0) * state.t.ln().abs() + (state.sigma_dot / state.sigma).abs() * x.abs());
        assert!(f <= env, "{x}: {f} > {env}");
    }
    // the one-sided traces of the final profile are the stored ones
    let p = sol.profile(sol.levels() - 1).unwrap();
    let (l, r) = sol.grid.traces(sol.w.last().unwrap());
    assert_eq!(p.eval_side(0.0, Side::Left), l);
    assert_eq!(p.eval_side(0.0, Side::Right), r);
}
