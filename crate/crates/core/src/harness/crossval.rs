//! Glue between solver output and the reference module: finite-volume
//! initial data, L¹ differences and entropy samples.

use rayon::prelude::*;

use crate::error::Result;
use crate::function_core::{hilbert_piecewise, PiecewiseRegularFn, Side};
use crate::quadrature::gauss;
use crate::reference::{cell_averages, FVConfig, FVTrajectory, PieceSamples, SpaceTimeSamples};
use crate::single_shock::SingleShockSolution;

/// u = w + εφ of one level in frame coordinates, as a piecewise function.
pub fn u_profile(sol: &SingleShockSolution, level: usize) -> Result<PiecewiseRegularFn> {
    let corr = sol.corrector(level)?;
    let eps = sol.constants.hilbert_scale;
    sol.profile(level)?
        .map_values(|_, x, v| if x == 0.0 { v } else { v + eps * corr.value(x) })
}

/// Cell averages of the solver's u at a level, for starting the finite-volume scheme.
pub fn fv_initial(sol: &SingleShockSolution, level: usize, cfg: &FVConfig) -> Result<Vec<f64>> {
    let u = u_profile(sol, level)?;
    let y = sol.y_phys[level];
    Ok(cell_averages(cfg, |x| {
        let xf = x - y;
        u.eval_side(xf, if xf < 0.0 { Side::Left } else { Side::Right })
    }))
}

/// ∫_a^b |u_solver − u_fv| at one solver level and one stored finite-volume time,
/// with cells split at the shock.
pub fn l1_single_vs_fv(
    sol: &SingleShockSolution,
    level: usize,
    fv: &FVTrajectory,
    fv_index: usize,
    span: (f64, f64),
) -> Result<f64> {
    let u = u_profile(sol, level)?;
    let y = sol.y_phys[level];
    let e = fv.config.edges();
    let cells = &fv.u[fv_index];
    let eval = |x: f64| {
        let xf = x - y;
        u.eval_side(xf, if xf < 0.0 { Side::Left } else { Side::Right })
    };
    Ok((0..cells.len())
        .into_par_iter()
        .map(|i| {
            let (a, b) = (e[i].max(span.0), e[i + 1].min(span.1));
            if b <= a {
                return 0.0;
            }
            let c = cells[i];
            let mut cuts = vec![a];
            if y > a && y < b {
                cuts.push(y);
            }
            cuts.push(b);
            cuts.windows(2).map(|w| gauss(|x| (eval(x) - c).abs(), w[0], w[1], 8)).sum::<f64>()
        })
        .sum())
}

/// Samples of u and εH[u] on [x_box.0, y(t)] and [y(t), x_box.1].
///
/// Both are evaluated at the given levels on one fixed frame grid per side,
/// graded toward the shock, then interpolated linearly in time together with
/// the shock position at `substeps` points per interval between levels.
pub fn single_space_time_samples(
    sol: &SingleShockSolution,
    levels: &[usize],
    x_box: (f64, f64),
    n: usize,
    substeps: usize,
) -> Result<SpaceTimeSamples> {
    let eps = sol.constants.hilbert_scale;
    let ys: Vec<f64> = levels.iter().map(|&k| sol.y_phys[k]).collect();
    let y_lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let y_hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let frame: [(Vec<f64>, Side); 2] = [
        (graded(x_box.0 - y_hi, n).into_iter().rev().collect(), Side::Left),
        (graded(x_box.1 - y_lo, n), Side::Right),
    ];
    let per_level: Vec<[(Vec<f64>, Vec<f64>); 2]> = levels
        .par_iter()
        .map(|&k| {
            let u = u_profile(sol, k)?;
            let side = |(xs, side): &(Vec<f64>, Side)| -> Result<(Vec<f64>, Vec<f64>)> {
                let mut uv = Vec::with_capacity(xs.len());
                let mut hv = Vec::with_capacity(xs.len());
                for &xf in xs {
                    uv.push(u.eval_side(xf, *side));
                    // H[u] is log-singular at the jump; sample just beside it
                    let xh = if xf == 0.0 {
                        if *side == Side::Left { -1e-12 } else { 1e-12 }
                    } else {
                        xf
                    };
                    hv.push(eps * hilbert_piecewise(&u, xh)?);
                }
                Ok((uv, hv))
            };
            Ok([side(&frame[0])?, side(&frame[1])?])
        })
        .collect::<Result<_>>()?;
    let m = substeps.max(1);
    let mut times = Vec::new();
    let mut out = Vec::new();
    let lerp = |a: &[f64], b: &[f64], th: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + th * (q - p)).collect() };
    for j in 0..levels.len() {
        let last = j + 1 == levels.len();
        for s in 0..if last { 1 } else { m } {
            let th = s as f64 / m as f64;
            let (j1, th) = if last { (j, 0.0) } else { (j + 1, th) };
            let t0 = sol.times[levels[j]];
            times.push(t0 + th * (sol.times[levels[j1]] - t0));
            let y = ys[j] + th * (ys[j1] - ys[j]);
            out.push(
                (0..2)
                    .map(|p| PieceSamples {
                        x: frame[p].0.iter().map(|xf| xf + y).collect(),
                        u: lerp(&per_level[j][p].0, &per_level[j1][p].0, th),
                        h: lerp(&per_level[j][p].1, &per_level[j1][p].1, th),
                    })
                    .collect(),
            );
        }
    }
    Ok(SpaceTimeSamples { times, levels: out })
}

/// n points from 0 to `end`, spaced quadratically so they cluster at the shock.
fn graded(end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| end * (j as f64 / (n - 1) as f64).powi(2)).collect()
}
