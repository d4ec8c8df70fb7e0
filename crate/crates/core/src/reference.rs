//! Independent reference solutions: the exact two-shock Burgers solution, the
//! integral of its Hilbert transform along characteristics, a finite-volume
//! Burgers–Hilbert scheme, and Kružkov entropy residuals.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_core::lambda;
use crate::quadrature::{gauss, integrate_graded, levels_for_distance};

/// Piecewise-constant Burgers data uℓ | um | ur with shocks at x̄₁ < x̄₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstBurgers {
    pub u_left: f64,
    pub u_mid: f64,
    pub u_right: f64,
    pub x1_bar: f64,
    pub x2_bar: f64,
}

impl PiecewiseConstBurgers {
    pub fn new(u_left: f64, u_mid: f64, u_right: f64, x1_bar: f64, x2_bar: f64) -> Result<Self> {
        if !(u_left > u_mid && u_mid > u_right) {
            return Err(Error::Entropy(format!(
                "states must decrease across both shocks, got {u_left} | {u_mid} | {u_right}"
            )));
        }
        if !(x1_bar < x2_bar) {
            return Err(Error::InvalidInput(format!("shock order {x1_bar} ≥ {x2_bar}")));
        }
        Ok(Self {
            u_left,
            u_mid,
            u_right,
            x1_bar,
            x2_bar,
        })
    }

    pub fn sigma1(&self) -> f64 {
        self.u_left - self.u_mid
    }

    pub fn sigma2(&self) -> f64 {
        self.u_mid - self.u_right
    }

    pub fn a1(&self) -> f64 {
        0.5 * (self.u_left + self.u_mid)
    }

    pub fn a2(&self) -> f64 {
        0.5 * (self.u_mid + self.u_right)
    }

    pub fn x1(&self, t: f64) -> f64 {
        self.x1_bar + self.a1() * t
    }

    pub fn x2(&self, t: f64) -> f64 {
        self.x2_bar + self.a2() * t
    }

    pub fn collision_time(&self) -> f64 {
        (self.x2_bar - self.x1_bar) / (self.a1() - self.a2())
    }

    pub fn collision_point(&self) -> f64 {
        self.x1(self.collision_time())
    }

    /// Position of the merged shock uℓ | ur after the collision.
    pub fn merged_position(&self, t: f64) -> f64 {
        self.collision_point() + 0.5 * (self.u_left + self.u_right) * (t - self.collision_time())
    }
}

/// u(t, x) before the collision; shock points take the left state.
pub fn burgers_exact(pc: &PiecewiseConstBurgers, t: f64, x: f64) -> Result<f64> {
    let tc = pc.collision_time();
    if t > tc {
        return Err(Error::PastCollision { t, collision: tc });
    }
    Ok(if x <= pc.x1(t) {
        pc.u_left
    } else if x <= pc.x2(t) {
        pc.u_mid
    } else {
        pc.u_right
    })
}

/// u(t, x) at any time, with the single merged shock after the collision.
pub fn burgers_exact_merged(pc: &PiecewiseConstBurgers, t: f64, x: f64) -> f64 {
    if t <= pc.collision_time() {
        return burgers_exact(pc, t, x).unwrap_or(pc.u_left);
    }
    if x <= pc.merged_position(t) {
        pc.u_left
    } else {
        pc.u_right
    }
}

/// Leading-order closed form of I(τ, y) = ∫₀^τ H[u(t)](x(t)) dt in each of the three regions.
pub fn i_integral_closed(pc: &PiecewiseConstBurgers, tau: f64, y: f64) -> Result<f64> {
    let (x1, x2) = (pc.x1(tau), pc.x2(tau));
    if y == x1 || y == x2 {
        return Err(Error::SingularEvaluation(y));
    }
    let zlz = |z: f64| z * z.ln();
    let (s1, s2) = (pc.sigma1(), pc.sigma2());
    let v = if y < x1 {
        zlz(x1 - y) + s2 / (2.0 * s1 + s2) * zlz(x2 - y)
    } else if y < x2 {
        zlz(y - x1) + zlz(x2 - y)
    } else {
        s1 / (s1 + 2.0 * s2) * zlz(y - x1) + zlz(y - x2)
    };
    Ok(2.0 / PI * v)
}

/// ∫_{t_a}^{t_b} of −(σ₁/π)ln|x₁(t) − x(t)| − (σ₂/π)ln|x₂(t) − x(t)| along the
/// straight characteristic through (τ, y), with explicit strengths.
pub fn i_integral_segment(
    pc: &PiecewiseConstBurgers,
    strengths: (f64, f64),
    tau: f64,
    y: f64,
    t_a: f64,
    t_b: f64,
) -> Result<f64> {
    let tc = pc.collision_time();
    if tau > tc {
        return Err(Error::PastCollision { t: tau, collision: tc });
    }
    if !(0.0 <= t_a && t_a <= t_b && t_b <= tau) {
        return Err(Error::InvalidInput(format!("segment [{t_a}, {t_b}] outside [0, {tau}]")));
    }
    let (x1, x2) = (pc.x1(tau), pc.x2(tau));
    if y == x1 || y == x2 {
        return Err(Error::SingularEvaluation(y));
    }
    let speed = burgers_exact(pc, tau, y)?;
    let mut total = 0.0;
    for (sigma, x_bar, a) in [(strengths.0, pc.x1_bar, pc.a1()), (strengths.1, pc.x2_bar, pc.a2())] {
        // gap d(t) = x_i(t) − x(t), linear in t
        let d = |t: f64| x_bar + a * t - (y + (t - tau) * speed);
        let (d_a, d_b) = (d(t_a), d(t_b));
        if d_a == 0.0 || d_a.signum() != d_b.signum() {
            return Err(Error::PathCrossing { t: t_a, x: y + (t_a - tau) * speed });
        }
        let rate = (a - speed).abs();
        let len = t_b - t_a;
        if len == 0.0 {
            continue;
        }
        // the log singularity sits |d(t_b)|/rate beyond t_b
        let lb = if rate > 0.0 {
            levels_for_distance(d_b.abs() / rate, len)
        } else {
            0
        };
        let integral = integrate_graded(|t| d(t).abs().ln(), t_a, t_b, 0, lb, 12);
        total -= sigma / PI * integral;
    }
    Ok(total)
}

/// I(τ, y) by quadrature of the shock log terms along the characteristic.
pub fn i_integral_quadrature(pc: &PiecewiseConstBurgers, tau: f64, y: f64) -> Result<f64> {
    i_integral_segment(pc, (pc.sigma1(), pc.sigma2()), tau, y, 0.0, tau)
}

/// Operator splitting between flux and source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitting {
    Strang,
    Lie,
}

/// Finite-volume settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FVConfig {
    pub cells: usize,
    pub cfl: f64,
    pub window: (f64, f64),
    pub t_end: f64,
    /// Factor ε in front of H[u].
    pub hilbert_scale: f64,
    pub splitting: Splitting,
    /// |u| above this aborts the run.
    pub blow_up: f64,
}

impl Default for FVConfig {
    fn default() -> Self {
        Self {
            cells: 2048,
            cfl: 0.9,
            window: (-8.0, 8.0),
            t_end: 0.05,
            hilbert_scale: 1.0,
            splitting: Splitting::Strang,
            blow_up: 1e3,
        }
    }
}

impl FVConfig {
    pub fn step(&self) -> f64 {
        (self.window.1 - self.window.0) / self.cells as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        let h = self.step();
        (0..=self.cells).map(|i| self.window.0 + h * i as f64).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.cells).map(|i| self.window.0 + h * (i as f64 + 0.5)).collect()
    }

    fn check(&self) -> Result<()> {
        if self.cells < 2 || !(self.window.1 > self.window.0) || !(self.t_end >= 0.0) {
            return Err(Error::InvalidInput("finite-volume grid or horizon is empty".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::InvalidInput(format!("CFL number {} outside (0, 0.9]", self.cfl)));
        }
        Ok(())
    }
}

/// Cell averages of f over the cells of a configuration (Gauss, 8 points per cell).
pub fn cell_averages<F: Fn(f64) -> f64 + Sync>(cfg: &FVConfig, f: F) -> Vec<f64> {
    let e = cfg.edges();
    let h = cfg.step();
    (0..cfg.cells)
        .into_par_iter()
        .map(|i| gauss(&f, e[i], e[i + 1], 8) / h)
        .collect()
}

/// Cell averages of H applied to a piecewise-constant function on a uniform grid.
///
/// Averaging (1/π)ln|x−a|/|x−b| over cells gives a Toeplitz kernel in the
/// index offset m: Λ(m+1) − 2Λ(m) + Λ(m−1), independent of the cell size.
#[derive(Debug, Clone)]
pub struct CellHilbert {
    kernel: Vec<f64>,
    n: usize,
}

impl CellHilbert {
    pub fn new(n: usize) -> Self {
        let kernel = (0..2 * n - 1)
            .map(|k| {
                let m = k as f64 - (n - 1) as f64;
                (lambda(m + 1.0) - 2.0 * lambda(m) + lambda(m - 1.0)) / PI
            })
            .collect();
        Self { kernel, n }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .into_par_iter()
            .map(|i| {
                // kernel index of offset i − j is i − j + n − 1
                let row = &self.kernel[i..i + n];
                row.iter().rev().zip(u).map(|(k, v)| k * v).sum()
            })
            .collect()
    }
}

/// Stored finite-volume trajectory.
#[derive(Debug, Clone)]
pub struct FVTrajectory {
    pub config: FVConfig,
    pub times: Vec<f64>,
    /// Cell averages per stored time.
    pub u: Vec<Vec<f64>>,
    /// ε·H[u] cell averages per stored time.
    pub source: Vec<Vec<f64>>,
    /// Σ u h per stored time.
    pub mass: Vec<f64>,
}

impl FVTrajectory {
    pub fn last(&self) -> &[f64] {
        self.u.last().unwrap()
    }

    /// Piecewise-constant samples for [`kruzhkov_residual`].
    pub fn entropy_samples(&self) -> SpaceTimeSamples {
        let e = self.config.edges();
        let levels = self
            .u
            .iter()
            .zip(&self.source)
            .map(|(u, s)| {
                (0..u.len())
                    .map(|i| PieceSamples {
                        x: vec![e[i], e[i + 1]],
                        u: vec![u[i]; 2],
                        h: vec![s[i]; 2],
                    })
                    .collect()
            })
            .collect();
        SpaceTimeSamples {
            times: self.times.clone(),
            levels,
        }
    }
}

/// Godunov flux for u²/2.
fn godunov_flux(ul: f64, ur: f64) -> f64 {
    let f = |u: f64| 0.5 * u * u;
    f(ul.max(0.0)).max(f(ur.min(0.0)))
}

fn flux_step(u: &[f64], dt: f64, h: f64) -> Vec<f64> {
    let n = u.len();
    // transmissive ends
    let get = |i: isize| u[i.clamp(0, n as isize - 1) as usize];
    let flux: Vec<f64> = (0..=n as isize).map(|k| godunov_flux(get(k - 1), get(k))).collect();
    (0..n).map(|i| u[i] - dt / h * (flux[i + 1] - flux[i])).collect()
}

fn source_step(u: &[f64], dt: f64, eps: f64, hilbert: &CellHilbert) -> Vec<f64> {
    if eps == 0.0 {
        return u.to_vec();
    }
    let k1 = hilbert.apply(u);
    let mid: Vec<f64> = u.iter().zip(&k1).map(|(v, k)| v + dt * eps * k).collect();
    let k2 = hilbert.apply(&mid);
    u.iter()
        .zip(k1.iter().zip(&k2))
        .map(|(v, (a, b))| v + 0.5 * dt * eps * (a + b))
        .collect()
}

/// Godunov scheme for u_t + (u²/2)_x = εH[u] with the source split off.
pub fn godunov_bh(u0: &[f64], cfg: &FVConfig) -> Result<FVTrajectory> {
    cfg.check()?;
    if u0.len() != cfg.cells {
        return Err(Error::InvalidInput(format!("{} samples for {} cells", u0.len(), cfg.cells)));
    }
    let h = cfg.step();
    let eps = cfg.hilbert_scale;
    let hilbert = CellHilbert::new(cfg.cells);
    let src = |u: &[f64]| -> Vec<f64> {
        if eps == 0.0 {
            vec![0.0; u.len()]
        } else {
            hilbert.apply(u).into_iter().map(|v| eps * v).collect()
        }
    };
    let mass = |u: &[f64]| u.iter().sum::<f64>() * h;
    let mut u = u0.to_vec();
    let mut traj = FVTrajectory {
        config: cfg.clone(),
        times: vec![0.0],
        source: vec![src(&u)],
        mass: vec![mass(&u)],
        u: vec![u.clone()],
    };
    let mut t = 0.0;
    while t < cfg.t_end {
        let vmax = u.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
        let mut dt = cfg.cfl * h / vmax;
        if t + dt >= cfg.t_end {
            dt = cfg.t_end - t;
        }
        u = match cfg.splitting {
            Splitting::Strang => {
                let a = source_step(&u, 0.5 * dt, eps, &hilbert);
                check_cfl(&a, dt, h)?;
                let b = flux_step(&a, dt, h);
                source_step(&b, 0.5 * dt, eps, &hilbert)
            }
            Splitting::Lie => {
                let b = flux_step(&u, dt, h);
                source_step(&b, dt, eps, &hilbert)
            }
        };
        t = if dt == cfg.t_end - t { cfg.t_end } else { t + dt };
        if let Some(v) = u.iter().find(|v| !v.is_finite() || v.abs() > cfg.blow_up) {
            return Err(Error::Numerical(format!("finite-volume solution reached {v} at t = {t}")));
        }
        traj.times.push(t);
        traj.source.push(src(&u));
        traj.mass.push(mass(&u));
        traj.u.push(u.clone());
    }
    Ok(traj)
}

fn check_cfl(u: &[f64], dt: f64, h: f64) -> Result<()> {
    let vmax = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if vmax * dt / h > 1.0 {
        return Err(Error::Numerical(format!("CFL number {} after the source half step", vmax * dt / h)));
    }
    Ok(())
}

/// Nonnegative C¹ bump (1−s²)³(1−q²)³ on a space-time box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub t: (f64, f64),
    pub x: (f64, f64),
}

impl Bump {
    fn factor(v: f64, (a, b): (f64, f64)) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let s = (v - 0.5 * (a + b)) / half;
        if s.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let g = 1.0 - s * s;
        (g * g * g, -6.0 * s * g * g / half)
    }

    /// (ψ, ψ_t, ψ_x).
    pub fn eval(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let (ft, dt) = Self::factor(t, self.t);
        let (fx, dx) = Self::factor(x, self.x);
        (ft * fx, dt * fx, ft * dx)
    }
}

/// A Kružkov constant paired with a test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruzhkovProbe {
    pub k: f64,
    pub bump: Bump,
}

/// Five probes on a box: constants spread over [k_lo, k_hi], bumps in the box interior.
pub fn default_probes(t_box: (f64, f64), x_box: (f64, f64), k_range: (f64, f64)) -> Vec<KruzhkovProbe> {
    let (t0, t1) = t_box;
    let (x0, x1) = x_box;
    let lx = x1 - x0;
    let centers = [0.5, 0.35, 0.65, 0.5, 0.5];
    let widths = [0.9, 0.5, 0.5, 0.3, 0.7];
    (0..5)
        .map(|i| {
            let k = k_range.0 + (k_range.1 - k_range.0) * i as f64 / 4.0;
            let c = x0 + centers[i] * lx;
            let w = 0.5 * widths[i] * lx;
            KruzhkovProbe {
                k,
                bump: Bump {
                    t: (t0, t1),
                    x: (c - w, c + w),
                },
            }
        })
        .collect()
}

/// u and ε·H[u] sampled on one smooth piece; linear in between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceSamples {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
}

/// Piecewise samples of a solution at a sequence of times.
#[derive(Debug, Clone, Default)]
pub struct SpaceTimeSamples {
    pub times: Vec<f64>,
    /// Pieces per time, left to right; jumps sit between pieces.
    pub levels: Vec<Vec<PieceSamples>>,
}

impl SpaceTimeSamples {
    /// Samples functions on given pieces: `pieces(t)` lists the piece edges.
    pub fn from_fn<P, U, H>(times: &[f64], pieces: P, n: usize, u: U, h: H) -> Self
    where
        P: Fn(f64) -> Vec<f64>,
        U: Fn(f64, usize, f64) -> f64,
        H: Fn(f64, usize, f64) -> f64,
    {
        let levels = times
            .iter()
            .map(|&t| {
                let e = pieces(t);
                e.windows(2)
                    .enumerate()
                    .map(|(p, w)| {
                        let x: Vec<f64> = (0..n).map(|k| w[0] + (w[1] - w[0]) * k as f64 / (n - 1) as f64).collect();
                        PieceSamples {
                            u: x.iter().map(|&v| u(t, p, v)).collect(),
                            h: x.iter().map(|&v| h(t, p, v)).collect(),
                            x,
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            times: times.to_vec(),
            levels,
        }
    }
}

fn kruzhkov_density(u: f64, h: f64, k: f64, psi: (f64, f64, f64)) -> f64 {
    let s = (u - k).signum();
    let s = if u == k { 0.0 } else { s };
    (u - k).abs() * psi.1 + s * 0.5 * (u * u - k * k) * psi.2 + s * h * psi.0
}

/// ∫ of the Kružkov density over one level, splitting linear cells where u = k.
fn level_integral(pieces: &[PieceSamples], t: f64, probe: &KruzhkovProbe) -> f64 {
    let (bx0, bx1) = probe.bump.x;
    let k = probe.k;
    let mut acc = 0.0;
    for p in pieces {
        for j in 0..p.x.len() - 1 {
            let (a, b) = (p.x[j], p.x[j + 1]);
            if b <= bx0 || a >= bx1 || b <= a {
                continue;
            }
            let lerp = |v: &[f64], x: f64| v[j] + (v[j + 1] - v[j]) * (x - a) / (b - a);
            let (ga, gb) = (p.u[j] - k, p.u[j + 1] - k);
            let mut cuts = vec![a.max(bx0)];
            if ga * gb < 0.0 {
                let r = a + (b - a) * ga / (ga - gb);
                if r > cuts[0] && r < b.min(bx1) {
                    cuts.push(r);
                }
            }
            cuts.push(b.min(bx1));
            for w in cuts.windows(2) {
                acc += gauss(
                    |x| kruzhkov_density(lerp(&p.u, x), lerp(&p.h, x), k, probe.bump.eval(t, x)),
                    w[0],
                    w[1],
                    6,
                );
            }
        }
    }
    acc
}

/// Left side of the Kružkov inequality for each probe (trapezoid rule in time).
pub fn kruzhkov_residual(samples: &SpaceTimeSamples, probes: &[KruzhkovProbe]) -> Vec<f64> {
    probes
        .par_iter()
        .map(|probe| {
            let vals: Vec<f64> = samples
                .times
                .iter()
                .zip(&samples.levels)
                .map(|(&t, lv)| level_integral(lv, t, probe))
                .collect();
            samples
                .times
                .windows(2)
                .zip(vals.windows(2))
                .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
                .sum()
        })
        .collect()
}
