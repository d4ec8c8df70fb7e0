use std::f64::consts::PI;

use bh_core::function_core::{
    hilbert_gb, hilbert_l2_norm, hilbert_piecewise, hilbert_pv, jump, sobolev_norm, trace, uniform_nodes,
    GridFn1D, LinearHilbert, PiecewiseRegularFn, RealFn, Side,
};
use bh_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn step() -> PiecewiseRegularFn {
    PiecewiseRegularFn::from_fn((-2.0, 2.0), vec![0.0], 5, |p, _| if p == 0 { 1.0 } else { 0.0 }).unwrap()
}

fn bump(x: f64, c: f64, w: f64) -> f64 {
    let q = (x - c) / w;
    if q.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - q * q).powi(4)
    }
}

#[test]
fn step_traces_and_jump() {
    let f = step();
    assert_eq!(trace(&f, 0.0, Side::Left).unwrap(), 1.0);
    assert_eq!(trace(&f, 0.0, Side::Right).unwrap(), 0.0);
    assert_eq!(jump(&f, 0.0).unwrap(), 1.0);
    assert!(matches!(trace(&f, 3.0, Side::Left), Err(Error::Domain { .. })));
    assert!(jump(&f, 0.5).is_err());
}

#[test]
fn entropic_jump_and_continuous_traces() {
    let f = PiecewiseRegularFn::from_fn((-1.0, 1.0), vec![0.0], 4, |p, _| if p == 0 { 2.0 } else { -1.0 }).unwrap();
    assert_eq!(jump(&f, 0.0).unwrap(), 3.0);
    let g = PiecewiseRegularFn::from_fn((-2.0, 2.0), vec![1.0], 40, |_, x| x * x).unwrap();
    assert!((trace(&g, 1.0, Side::Left).unwrap() - 1.0).abs() < 1e-12);
    assert!(jump(&g, 1.0).unwrap().abs() < 1e-12);
}

#[test]
fn sobolev_of_zero_is_zero() {
    let f = PiecewiseRegularFn::from_fn((-1.0, 1.0), vec![], 10, |_, _| 0.0).unwrap();
    for order in 0..=2 {
        assert_eq!(sobolev_norm(&f, order, &[]).unwrap().total, 0.0);
    }
}

#[test]
fn sobolev_quartic_bump() {
    // ∫_{-1}^{1} (1-x²)⁴ dx = 256/315
    let expected = (256.0f64 / 315.0).sqrt();
    let f = PiecewiseRegularFn::from_fn((-1.0, 1.0), vec![], 401, |_, x| (1.0 - x * x).powi(2)).unwrap();
    let r = sobolev_norm(&f, 0, &[]).unwrap();
    assert!((r.total - expected).abs() < 1e-8, "{}", r.total);
}

#[test]
fn sobolev_hat_order_one() {
    // ∫ hat² = 2/3, ∫ hat'² = 2
    let expected = (2.0f64 / 3.0 + 2.0).sqrt();
    let f = PiecewiseRegularFn::from_fn((-2.0, 2.0), vec![-1.0, 0.0, 1.0], 9, |_, x| (1.0 - x.abs()).max(0.0)).unwrap();
    let r = sobolev_norm(&f, 1, &[]).unwrap();
    assert!((r.total - expected).abs() < 1e-12, "{}", r.total);
    let sq: f64 = r.per_piece_norms.iter().map(|v| v * v).sum();
    assert!((sq.sqrt() - r.total).abs() < 1e-14);
}

#[test]
fn sobolev_rejects_full_exclusion_and_high_order() {
    let f = step();
    assert!(sobolev_norm(&f, 1, &[(-3.0, 3.0)]).is_err());
    assert!(matches!(sobolev_norm(&f, 3, &[]), Err(Error::Unsupported(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn sobolev_shrinks_with_exclusions(a in -1.5f64..1.0, len in 0.01f64..0.8, order in 0usize..3) {
        let f = PiecewiseRegularFn::from_fn((-2.0, 2.0), vec![0.0], 60, |p, x| {
            if p == 0 { (x + 2.0).sin() } else { (2.0 - x) * x.cos() }
        }).unwrap();
        let full = sobolev_norm(&f, order, &[]).unwrap().total;
        let cut = sobolev_norm(&f, order, &[(a, a + len)]).unwrap().total;
        prop_assert!(cut <= full + 1e-14);
        let wider = sobolev_norm(&f, order, &[(a - 0.1, a + len + 0.1)]).unwrap().total;
        prop_assert!(wider <= cut + 1e-14);
    }
}

#[test]
fn pv_even_function_vanishes_at_center() {
    let f = GridFn1D::sample((-8.0, 8.0), 801, |x| (-(x - 0.3) * (x - 0.3)).exp()).unwrap();
    assert!(hilbert_pv(&f, 0.3).unwrap().abs() < 1e-9);
}

#[test]
fn pv_indicator_closed_form() {
    // (1/π)∫_{-1}^{1} dy/(2-y) = ln 3/π
    let f = PiecewiseRegularFn::from_fn((-2.0, 4.0), vec![-1.0, 1.0], 4, |p, _| if p == 1 { 1.0 } else { 0.0 }).unwrap();
    let v = hilbert_pv(&f, 2.0).unwrap();
    assert!((v - 3f64.ln() / PI).abs() < 1e-8, "{v}");
    assert!((v - 0.34966).abs() < 1e-4);
}

#[test]
fn pv_lorentzian_pair() {
    // H[1/(1+y²)](x) = x/(1+x²); window wide enough for the truncated tail to be ~1e-6
    let s_max = 400f64.asinh();
    let nodes: Vec<f64> = uniform_nodes(-s_max, s_max, 6001).into_iter().map(|s| s.sinh().clamp(-400.0, 400.0)).collect();
    let values = nodes.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
    let f = GridFn1D::new((-400.0, 400.0), nodes, values, true).unwrap();
    let v = hilbert_pv(&f, 1.0).unwrap();
    assert!((v - 0.5).abs() < 1e-3, "{v}");
}

#[test]
fn pv_rejects_edge_points() {
    let f = GridFn1D::sample((-1.0, 1.0), 11, |x| 1.0 - x * x).unwrap();
    assert!(hilbert_pv(&f, 1.0).is_err());
    let g = GridFn1D::new((-1.0, 1.0), uniform_nodes(-1.0, 1.0, 11), vec![1.0; 11], false).unwrap();
    assert!(hilbert_pv(&g, 0.0).is_err());
}

#[test]
fn piecewise_indicator_jump_terms() {
    let f = PiecewiseRegularFn::from_fn((-2.0, 2.0), vec![-1.0, 0.0], 4, |p, _| if p == 1 { 1.0 } else { 0.0 }).unwrap();
    let v = hilbert_piecewise(&f, 1.0).unwrap();
    assert!((v - 2f64.ln() / PI).abs() < 1e-13);
    assert!((v - 0.22064).abs() < 1e-5);
    let pv = hilbert_pv(&f, 1.0).unwrap();
    assert!((v - pv).abs() < 1e-8);
    assert!(matches!(hilbert_piecewise(&f, 0.0), Err(Error::SingularEvaluation(_))));
}

#[test]
fn piecewise_zero() {
    let f = PiecewiseRegularFn::from_fn((-1.0, 1.0), vec![0.0], 6, |_, _| 0.0).unwrap();
    assert_eq!(hilbert_piecewise(&f, 0.3).unwrap(), 0.0);
}

#[test]
fn piecewise_matches_pv_on_smooth_data() {
    let f = PiecewiseRegularFn::from_fn((-3.0, 3.0), vec![], 601, |_, x| bump(x, 0.2, 1.7) - 0.5 * bump(x, -1.0, 0.9)).unwrap();
    for &x in &[-2.5, -0.7, 0.0, 0.45, 1.3, 2.8, 2.95] {
        let a = hilbert_piecewise(&f, x).unwrap();
        let b = hilbert_pv(&f, x).unwrap();
        assert!((a - b).abs() <= 1e-3 * b.abs().max(1e-2), "x={x}: {a} vs {b}");
    }
}

#[test]
fn linear_product_rule_matches_spline_route() {
    // piecewise-linear product integration converges to the spline route as nodes refine
    let f = |p: usize, x: f64| if p == 0 { 1.0 + 0.3 * x.sin() } else { -0.5 * (1.0 - x / 4.0) * (1.0 - x / 4.0) };
    let pw = PiecewiseRegularFn::from_fn((-4.0, 4.0), vec![0.0], 2001, f).unwrap();
    let nodes: Vec<Vec<f64>> = pw.pieces().iter().map(|s| s.nodes().to_vec()).collect();
    let values: Vec<Vec<f64>> = pw.pieces().iter().map(|s| s.values().to_vec()).collect();
    let targets = vec![-3.1, -0.4, 0.7, 2.2];
    let op = LinearHilbert::new(nodes, targets.clone()).with_cache();
    let h = op.apply(&values);
    let sigma = jump(&pw, 0.0).unwrap();
    for (x, v) in targets.iter().zip(h) {
        // the operator leaves out the breakpoint's own log term
        let full = v - sigma / PI * x.abs().ln();
        let reference = hilbert_piecewise(&pw, *x).unwrap();
        assert!((full - reference).abs() < 1e-5, "x={x}: {full} vs {reference}");
    }
}

#[test]
fn random_piecewise_cubics_agree_with_pv() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..6 {
        let n_jumps = 1 + case % 3;
        let mut bps: Vec<f64> = (0..n_jumps).map(|_| rng.gen_range(-2.5..2.5)).collect();
        bps.sort_by(f64::total_cmp);
        if bps.windows(2).any(|w| w[1] - w[0] < 0.3) {
            continue;
        }
        let coeffs: Vec<[f64; 4]> = (0..=n_jumps).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3), rng.gen_range(-0.1..0.1)]).collect();
        let f = PiecewiseRegularFn::from_fn((-4.0, 4.0), bps.clone(), 41, |p, x| {
            let c = coeffs[p];
            c[0] + x * (c[1] + x * (c[2] + x * c[3]))
        })
        .unwrap();
        for _ in 0..4 {
            let x: f64 = rng.gen_range(-3.9..3.9);
            if bps.iter().any(|b| (x - b).abs() < 0.05) {
                continue;
            }
            let a = hilbert_piecewise(&f, x).unwrap();
            let b = hilbert_pv(&f, x).unwrap();
            assert!((a - b).abs() <= 1e-3 * b.abs().max(1e-3), "case {case}, x={x}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn pv_is_linear(alpha in -2.0f64..2.0, beta in -2.0f64..2.0, x in -3.0f64..3.0) {
        let f = |y: f64| bump(y, 0.5, 1.5);
        let g = |y: f64| bump(y, -1.0, 1.0) * y;
        let ff = GridFn1D::sample((-4.0, 4.0), 401, f).unwrap();
        let gg = GridFn1D::sample((-4.0, 4.0), 401, g).unwrap();
        let hh = GridFn1D::sample((-4.0, 4.0), 401, |y| alpha * f(y) + beta * g(y)).unwrap();
        let lhs = hilbert_pv(&hh, x).unwrap();
        let rhs = alpha * hilbert_pv(&ff, x).unwrap() + beta * hilbert_pv(&gg, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8);
    }
}

#[test]
fn isometry_on_smooth_bump() {
    let f = GridFn1D::sample((-8.0, 8.0), 2049, |x| bump(x, 0.4, 2.0) + 0.3 * bump(x, -2.0, 1.0)).unwrap();
    let ratio = hilbert_l2_norm(&f).unwrap() / f.l2_norm_sq().sqrt();
    assert!((ratio - 1.0).abs() < 1e-2, "{ratio}");
}

#[test]
fn anti_involution_on_zero_mean_data() {
    let f = |x: f64| bump(x, 0.8, 1.2) - bump(x, -0.8, 1.2);
    let g = GridFn1D::sample((-8.0, 8.0), 1025, f).unwrap();
    let nodes = g.nodes().to_vec();
    let hf: Vec<f64> = nodes
        .iter()
        .map(|&x| if x.abs() >= 8.0 { 0.0 } else { hilbert_pv(&g, x).unwrap() })
        .collect();
    let h = GridFn1D::new((-8.0, 8.0), nodes, hf, true).unwrap();
    let scale = 1.0;
    for &x in &[-3.0, -1.5, -0.8, -0.2, 0.5, 1.1, 2.5, 3.9] {
        let hh = hilbert_pv(&h, x).unwrap();
        assert!((hh + f(x)).abs() <= 1e-2 * scale, "x={x}: {hh} vs {}", -f(x));
    }
}

#[test]
fn hilbert_gb_far_field_decays_like_inverse_distance() {
    for &b in &[0.0, 0.05, 1.0 / (2.0 * std::f64::consts::E)] {
        let c = hilbert_gb(b, 10.0, 0).unwrap().abs() * 10.0;
        for &x in &[12.0, 20.0, 50.0, -15.0, -40.0] {
            let v = hilbert_gb(b, x, 0).unwrap();
            assert!(v.abs() * x.abs() <= 1.5 * c + 1e-12, "b={b}, x={x}");
        }
    }
}

#[test]
fn hilbert_gb_matches_pv_on_sampled_g0() {
    // nodes graded toward the cusp at 0
    let g0 = |x: f64| bh_core::correctors::g_b(0.0, x);
    let left = (uniform_nodes(-3.0, 0.0, 8), vec![0.0; 8]);
    let mut right_x: Vec<f64> = (0..=400).map(|k| 2.0 * (k as f64 / 400.0).powi(4)).collect();
    right_x.extend(uniform_nodes(2.0, 3.0, 6).into_iter().skip(1));
    let right_y = right_x.iter().map(|&x| g0(x)).collect();
    let f = PiecewiseRegularFn::from_pieces((-3.0, 3.0), vec![0.0], vec![left, (right_x, right_y)]).unwrap();
    let v = hilbert_gb(0.0, -0.1, 0).unwrap();
    let pv = hilbert_pv(&f, -0.1).unwrap();
    assert!((v - pv).abs() < 1e-3, "{v} vs {pv}");
}

#[test]
fn hilbert_gb_derivatives_match_differences() {
    for &b in &[0.0, 1e-3, 0.1] {
        for &x in &[-0.3f64, -0.01, 0.004, 0.05, 0.3, 0.8, 1.4, 2.5] {
            for k in 1..=3 {
                let h = 1e-4 * x.abs().min(1.0);
                let fd = (hilbert_gb(b, x + h, k - 1).unwrap() - hilbert_gb(b, x - h, k - 1).unwrap()) / (2.0 * h);
                let an = hilbert_gb(b, x, k).unwrap();
                assert!((fd - an).abs() <= 1e-4 * (1.0 + an.abs()), "b={b} x={x} k={k}: {fd} vs {an}");
            }
        }
    }
}

#[test]
fn hilbert_gb_first_derivative_log_squared_growth() {
    let env = |x: f64| x.ln().powi(2);
    let c = (0..=24)
        .map(|k| 10f64.powf(-4.0 + 3.0 * k as f64 / 24.0))
        .map(|x| hilbert_gb(0.0, x, 1).unwrap().abs() / env(x))
        .fold(0.0, f64::max);
    assert!(c.is_finite() && c < 1.0, "{c}");
    let v1 = hilbert_gb(0.0, 0.01, 1).unwrap().abs();
    let v2 = hilbert_gb(0.0, 0.001, 1).unwrap().abs();
    assert!(v2 / v1 <= c * env(0.001) / v1);
    assert!(v1 <= c * env(0.01));
}

#[test]
fn hilbert_gb_argument_checks() {
    assert!(matches!(hilbert_gb(0.0, 0.5, 4), Err(Error::Unsupported(_))));
    assert!(hilbert_gb(0.5, 0.5, 0).is_err());
    assert!(hilbert_gb(0.0, 0.0, 0).is_ok());
    assert!(hilbert_gb(0.0, 0.0, 1).is_err());
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let f = PiecewiseRegularFn::from_fn((-1.0, 1.0), vec![0.25], 7, |p, x| (3.0 * x).sin() + p as f64 / 3.0).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let g = PiecewiseRegularFn::read_csv(std::io::Cursor::new(buf)).unwrap();
    assert_eq!(f.breakpoints(), g.breakpoints());
    for (a, b) in f.pieces().iter().zip(g.pieces()) {
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.values(), b.values());
    }
    assert_eq!(g.window(), f.window());
    assert_eq!(g.value(0.1), f.value(0.1));
}
