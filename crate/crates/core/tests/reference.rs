use std::f64::consts::PI;

use bh_core::error::Error;
use bh_core::reference::*;
use proptest::prelude::*;

fn preset() -> PiecewiseConstBurgers {
    PiecewiseConstBurgers::new(2.0, 0.0, -2.0, -1.0, 1.0).unwrap()
}

#[test]
fn preset_collides_at_one_at_the_origin() {
    let pc = preset();
    assert_eq!(pc.collision_time(), 1.0);
    assert_eq!(pc.collision_point(), 0.0);
    assert_eq!(burgers_exact(&pc, 0.5, -0.6).unwrap(), 2.0);
    assert_eq!(burgers_exact(&pc, 0.5, -0.4).unwrap(), 0.0);
    assert_eq!(burgers_exact(&pc, 0.5, 0.6).unwrap(), -2.0);
    assert!(matches!(burgers_exact(&pc, 1.2, 0.0), Err(Error::PastCollision { .. })));
    assert_eq!(burgers_exact_merged(&pc, 1.2, -0.1), 2.0);
    assert_eq!(burgers_exact_merged(&pc, 1.2, 0.1), -2.0);
}

#[test]
fn rejects_non_entropic_or_misordered_data() {
    assert!(matches!(PiecewiseConstBurgers::new(0.0, 1.0, -1.0, -1.0, 1.0), Err(Error::Entropy(_))));
    assert!(PiecewiseConstBurgers::new(2.0, 0.0, -2.0, 1.0, -1.0).is_err());
}

proptest! {
    #[test]
    fn shocks_satisfy_rankine_hugoniot(ul in 0.5f64..3.0, dm in 0.1f64..2.0, dr in 0.1f64..2.0, t in 0.0f64..1.0) {
        let pc = PiecewiseConstBurgers::new(ul, ul - dm, ul - dm - dr, -1.0, 1.0).unwrap();
        let t = t * pc.collision_time();
        let e = 1e-9;
        for (x, s) in [(pc.x1(t), pc.a1()), (pc.x2(t), pc.a2())] {
            let (l, r) = (burgers_exact(&pc, t, x - e).unwrap(), burgers_exact(&pc, t, x + e).unwrap());
            prop_assert!((s - 0.5 * (l + r)).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_changes_only_by_boundary_flux(ul in 0.5f64..3.0, dm in 0.1f64..2.0, dr in 0.1f64..2.0, t in 0.0f64..1.0) {
        let pc = PiecewiseConstBurgers::new(ul, ul - dm, ul - dm - dr, -1.0, 1.0).unwrap();
        let t = t * pc.collision_time();
        let big = 50.0;
        // exact integral over [−big, big] from the cell layout at time t
        let mass = |t: f64| {
            let (x1, x2) = (pc.x1(t), pc.x2(t));
            pc.u_left * (x1 + big) + pc.u_mid * (x2 - x1) + pc.u_right * (big - x2)
        };
        let flux = 0.5 * (pc.u_left * pc.u_left - pc.u_right * pc.u_right);
        prop_assert!((mass(t) - mass(0.0) - flux * t).abs() < 1e-10);
        // and the sampled solution agrees with that integral
        let n = 20000;
        let h = 2.0 * big / n as f64;
        let sampled: f64 = (0..n).map(|i| burgers_exact(&pc, t, -big + h * (i as f64 + 0.5)).unwrap() * h).sum();
        prop_assert!((sampled - mass(t)).abs() < 2.0 * h * (ul + 4.0));
    }
}

#[test]
fn symmetric_midpoint_value() {
    let pc = preset();
    let tau = 0.25;
    let d = 0.5 * (pc.x2(tau) - pc.x1(tau));
    let v = i_integral_closed(&pc, tau, 0.0).unwrap();
    assert!((v - 2.0 / PI * 2.0 * d * d.ln()).abs() < 1e-15);
}

#[test]
fn far_term_weight_on_the_left() {
    // σ₁ = 1, σ₂ = 2: far weight σ₂/(2σ₁+σ₂) = 1/2
    let pc = PiecewiseConstBurgers::new(2.0, 1.0, -1.0, -1.0, 1.0).unwrap();
    let (tau, y) = (0.1, -3.0);
    let (d1, d2) = (pc.x1(tau) - y, pc.x2(tau) - y);
    let expected = 2.0 / PI * (d1 * d1.ln() + 0.5 * d2 * d2.ln());
    assert!((i_integral_closed(&pc, tau, y).unwrap() - expected).abs() < 1e-14);
}

#[test]
fn empty_time_interval_gives_zero() {
    let pc = preset();
    assert_eq!(i_integral_quadrature(&pc, 0.0, 0.3).unwrap(), 0.0);
}

#[test]
fn quadrature_matches_the_exact_log_integral() {
    // along a straight path the gap is linear, so ∫ ln|d| has a closed antiderivative
    let pc = preset();
    let tau = 0.5;
    for y in [-2.0, -0.9, -0.51, -0.3, 0.2, 0.49, 1.3] {
        let u = burgers_exact(&pc, tau, y).unwrap();
        let mut exact = 0.0;
        for (s, xb, a) in [(pc.sigma1(), pc.x1_bar, pc.a1()), (pc.sigma2(), pc.x2_bar, pc.a2())] {
            let d_tau = (xb + a * tau - y).abs();
            let r = (a - u).abs();
            let d_0 = d_tau + r * tau;
            let big_l = |z: f64| z * z.ln() - z;
            exact -= s / PI * (big_l(d_0) - big_l(d_tau)) / r;
        }
        let q = i_integral_quadrature(&pc, tau, y).unwrap();
        assert!((q - exact).abs() < 1e-12, "{y}: {q} vs {exact}");
    }
}

#[test]
fn quadrature_is_linear_in_strength() {
    let pc = preset();
    for y in [-1.5, -0.2, 0.7] {
        let one = i_integral_segment(&pc, (2.0, 2.0), 0.5, y, 0.0, 0.5).unwrap();
        let two = i_integral_segment(&pc, (4.0, 4.0), 0.5, y, 0.0, 0.5).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-13);
    }
}

#[test]
fn quadrature_is_additive_along_one_characteristic() {
    let pc = preset();
    let (t1, t2) = (0.2, 0.6);
    for y in [-1.5, -0.3, 0.1, 0.9] {
        let u = burgers_exact(&pc, t2, y).unwrap();
        let y1 = y + (t1 - t2) * u;
        let whole = i_integral_quadrature(&pc, t2, y).unwrap();
        let head = i_integral_quadrature(&pc, t1, y1).unwrap();
        let tail = i_integral_segment(&pc, (pc.sigma1(), pc.sigma2()), t2, y, t1, t2).unwrap();
        assert!((head + tail - whole).abs() < 1e-12, "{y}");
    }
}

#[test]
fn crossing_paths_are_rejected() {
    // a middle-state path cannot cross, but start on a shock is singular
    let pc = preset();
    assert!(matches!(i_integral_quadrature(&pc, 0.5, pc.x1(0.5)), Err(Error::SingularEvaluation(_))));
    assert!(matches!(i_integral_quadrature(&pc, 1.5, 0.0), Err(Error::PastCollision { .. })));
}

#[test]
fn remainder_is_smooth_away_from_shocks() {
    let pc = preset();
    for tau in [0.25, 0.5] {
        let rem = |y: f64| i_integral_quadrature(&pc, tau, y).unwrap() - i_integral_closed(&pc, tau, y).unwrap();
        let (x1, x2) = (pc.x1(tau), pc.x2(tau));
        let ys: Vec<f64> = (0..=60)
            .map(|k| -4.0 + 8.0 * k as f64 / 60.0)
            .filter(|&y| (y - x1).abs() >= 0.1 && (y - x2).abs() >= 0.1)
            .collect();
        let mut worst = [0.0f64; 2];
        for (j, h) in [2e-3, 1e-3].into_iter().enumerate() {
            for &y in &ys {
                let d = (rem(y + h) - rem(y - h)) / (2.0 * h);
                worst[j] = worst[j].max(d.abs());
                assert!(rem(y).abs() < 10.0);
            }
        }
        assert!(worst[0] < 10.0);
        assert!((worst[1] - worst[0]).abs() < 0.2 * worst[0], "{tau}: {worst:?}");
    }
}

#[test]
fn slopes_diverge_logarithmically_at_each_shock() {
    let pc = preset();
    let tau = 0.25;
    let slope = |f: &dyn Fn(f64) -> f64, y: f64, h: f64| (f(y + h) - f(y - h)) / (2.0 * h);
    let closed = |y: f64| i_integral_closed(&pc, tau, y).unwrap();
    let quad = |y: f64| i_integral_quadrature(&pc, tau, y).unwrap();
    for (x, side) in [(pc.x1(tau), -1.0), (pc.x1(tau), 1.0), (pc.x2(tau), -1.0), (pc.x2(tau), 1.0)] {
        for f in [&closed as &dyn Fn(f64) -> f64, &quad] {
            // slope changes by (2/π)·ln 10 per decade of distance, up to the smooth remainder
            let s: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
                .iter()
                .map(|&d| slope(f, x + side * d, 0.01 * d))
                .collect();
            for w in s.windows(2) {
                let rate = (w[1] - w[0]).abs() / 10f64.ln();
                assert!((rate - 2.0 / PI).abs() < 0.03 * 2.0 / PI, "{x} {side}: {rate}");
            }
        }
    }
}

fn fv(cells: usize, window: (f64, f64), t_end: f64, eps: f64) -> FVConfig {
    FVConfig {
        cells,
        window,
        t_end,
        hilbert_scale: eps,
        ..FVConfig::default()
    }
}

#[test]
fn riemann_shock_moves_at_the_average_speed() {
    let (ul, ur) = (1.0, -0.5);
    let cfg = fv(800, (-4.0, 4.0), 2.0, 0.0);
    let u0 = cell_averages(&cfg, |x| if x < 0.0 { ul } else { ur });
    let traj = godunov_bh(&u0, &cfg).unwrap();
    let mid = 0.5 * (ul + ur);
    let centers = cfg.centers();
    let u = traj.last();
    let i = (0..u.len() - 1).find(|&i| u[i] >= mid && u[i + 1] < mid).unwrap();
    let pos = centers[i] + (centers[i + 1] - centers[i]) * (u[i] - mid) / (u[i] - u[i + 1]);
    assert!((pos - mid * 2.0).abs() <= cfg.step(), "{pos}");
}

#[test]
fn rarefaction_converges_at_first_order() {
    let err = |cells: usize| {
        let cfg = fv(cells, (-3.0, 3.0), 1.0, 0.0);
        let u0 = cell_averages(&cfg, |x| if x < 0.0 { -1.0 } else { 1.0 });
        let traj = godunov_bh(&u0, &cfg).unwrap();
        let exact = |x: f64| x.clamp(-1.0, 1.0);
        let ex = cell_averages(&cfg, exact);
        traj.last().iter().zip(&ex).map(|(a, b)| (a - b).abs()).sum::<f64>() * cfg.step()
    };
    let (e1, e2) = (err(200), err(400));
    assert!(e2 < e1);
    assert!(e1 / e2 > 1.5, "{e1} {e2}");
}

#[test]
fn mass_is_conserved_without_the_source() {
    let cfg = fv(400, (-4.0, 4.0), 1.0, 0.0);
    let u0 = cell_averages(&cfg, |x| if x.abs() < 1.0 { (1.0 - x * x) * (1.0 + x) } else { 0.0 });
    let traj = godunov_bh(&u0, &cfg).unwrap();
    for m in &traj.mass {
        assert!((m - traj.mass[0]).abs() < 1e-12);
    }
}

#[test]
fn cell_hilbert_matches_closed_form_of_one_cell() {
    // H[χ_[a,b]](x) = (1/π) ln|x−a|/|x−b|, averaged over each cell by quadrature
    let cfg = fv(16, (-1.0, 1.0), 0.1, 1.0);
    let mut u = vec![0.0; 16];
    u[7] = 1.0;
    let e = cfg.edges();
    let h = CellHilbert::new(16).apply(&u);
    for i in [0, 3, 5, 9, 12, 15] {
        let f = |x: f64| ((x - e[7]).abs() / (x - e[8]).abs()).ln() / PI;
        let avg = bh_core::quadrature::integrate_graded(f, e[i], e[i + 1], 30, 30, 12) / cfg.step();
        assert!((h[i] - avg).abs() < 1e-10, "{i}: {} vs {avg}", h[i]);
    }
}

#[test]
fn bad_configs_are_rejected() {
    let mut cfg = fv(64, (-1.0, 1.0), 0.1, 0.0);
    cfg.cfl = 0.95;
    assert!(godunov_bh(&[0.0; 64], &cfg).is_err());
    let cfg = fv(64, (-1.0, 1.0), 0.1, 0.0);
    assert!(godunov_bh(&[0.0; 10], &cfg).is_err());
    let mut cfg = fv(64, (-1.0, 1.0), 0.1, 0.0);
    cfg.blow_up = 0.5;
    assert!(matches!(godunov_bh(&vec![1.0; 64], &cfg), Err(Error::Numerical(_))));
}

#[test]
fn bump_is_nonnegative_with_consistent_derivatives() {
    let b = Bump { t: (0.0, 1.0), x: (-1.0, 2.0) };
    let h = 1e-6;
    for (t, x) in [(0.3, 0.1), (0.7, -0.6), (0.5, 1.5)] {
        let (v, vt, vx) = b.eval(t, x);
        assert!(v > 0.0);
        assert!((vt - (b.eval(t + h, x).0 - b.eval(t - h, x).0) / (2.0 * h)).abs() < 1e-6);
        assert!((vx - (b.eval(t, x + h).0 - b.eval(t, x - h).0) / (2.0 * h)).abs() < 1e-6);
    }
    assert_eq!(b.eval(1.2, 0.0).0, 0.0);
    assert_eq!(b.eval(0.5, 2.0).0, 0.0);
}

fn stationary_jump(ul: f64, ur: f64) -> SpaceTimeSamples {
    let times: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    SpaceTimeSamples::from_fn(&times, |_| vec![-2.0, 0.0, 2.0], 3, |_, p, _| if p == 0 { ul } else { ur }, |_, _, _| 0.0)
}

#[test]
fn smooth_solution_has_nearly_zero_residual() {
    // u = x/(1+t) solves Burgers exactly
    let times: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
    let s = SpaceTimeSamples::from_fn(&times, |_| vec![-2.0, 2.0], 81, |t, _, x| x / (1.0 + t), |_, _, _| 0.0);
    let probes = default_probes((0.0, 1.0), (-1.5, 1.5), (-0.5, 0.5));
    for r in kruzhkov_residual(&s, &probes) {
        assert!(r >= -1e-3 && r.abs() < 1e-3, "{r}");
    }
}

#[test]
fn entropic_stationary_shock_passes_every_probe() {
    let s = stationary_jump(1.0, -1.0);
    let probes = default_probes((0.0, 1.0), (-1.0, 1.0), (-1.5, 1.5));
    assert!(kruzhkov_residual(&s, &probes).iter().all(|&r| r >= -1e-3));
}

#[test]
fn anti_entropic_jump_is_flagged() {
    let s = stationary_jump(-1.0, 1.0);
    let probes = default_probes((0.0, 1.0), (-1.0, 1.0), (-0.5, 0.5));
    let r = kruzhkov_residual(&s, &probes);
    assert!(r.iter().any(|&v| v < -1e-2), "{r:?}");
}

#[test]
fn godunov_output_is_entropic() {
    for eps in [0.0, 1.0] {
        let cfg = fv(400, (-4.0, 4.0), 0.5, eps);
        let u0 = cell_averages(&cfg, |x| if x < 0.0 { 1.0 } else { -0.5 } * (-(x * x) / 8.0).exp());
        let traj = godunov_bh(&u0, &cfg).unwrap();
        let probes = default_probes((0.0, 0.5), (-1.0, 1.0), (-0.6, 0.9));
        let r = kruzhkov_residual(&traj.entropy_samples(), &probes);
        assert!(r.iter().all(|&v| v >= -1e-3), "{eps}: {r:?}");
    }
}
