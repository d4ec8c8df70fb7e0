//! One shock in the frame attached to it: u = w + φ^(w) with w piecewise H²
//! and the shock fixed at x = 0, solved by freezing the transport speed (outer
//! loop) and iterating the source along its characteristics (inner loop).

use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{locate, trace_back, CharacteristicMap, SpeedField, Stencil, TraceOptions};
use crate::correctors::{eta, eta_dx, hilbert_phi0, phi, phi0, phi0_dx, CorrectorCoeffs, SingleCorrector, B_MAX};
use crate::error::{Error, Result};
use crate::function_core::{
    hilbert_gb, hilbert_piecewise, jump, sobolev_norm, trace, LinearHilbert, PiecewiseRegularFn, Side,
};
use crate::grid::{geometric_time_grid, graded_side};

/// H² differences below this are spline round-off on the finest cells and say
/// nothing about contraction.
pub const NOISE_FLOOR_H2: f64 = 1e-7;
/// Same for H¹ differences.
pub const NOISE_FLOOR_H1: f64 = 1e-12;

/// Space and time resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Nodes on each side of the shock, the shock node included.
    pub nodes_per_side: usize,
    /// First space step next to the shock.
    pub h_min: f64,
    /// Growth factor of the graded steps.
    pub growth: f64,
    pub half_width: f64,
    /// Ratio between successive time steps near t = 0.
    pub time_ratio: f64,
    /// First time step as a fraction of T.
    pub finest_step: f64,
    /// Largest time step as a fraction of T.
    pub max_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nodes_per_side: 512,
            h_min: 1e-5,
            growth: 1.08,
            half_width: 8.0,
            time_ratio: 0.8,
            finest_step: 1e-4,
            max_step: 0.05,
        }
    }
}

/// Constants of the construction plus numerical controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConstants {
    /// Cap on the H² norm away from the shock.
    pub m0: f64,
    /// One sixth of the initial jump.
    pub delta0: f64,
    pub delta1: f64,
    /// Horizon T.
    pub t_end: f64,
    pub grid: GridSpec,
    pub tol_inner: f64,
    pub tol_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// Factor ε in front of the Hilbert source; 0 gives plain Burgers.
    pub hilbert_scale: f64,
    /// Permits horizons beyond the admissible cap (monitors stay on).
    pub allow_long_horizon: bool,
}

impl SolverConstants {
    /// Derives δ₀ = jump/6, M₀ = 2‖w̄‖_{H²}, δ₁ and the default horizon from the data.
    pub fn from_data(w_bar: &PiecewiseRegularFn, coeffs: CorrectorCoeffs) -> Result<Self> {
        let sigma = jump(w_bar, 0.0)?;
        if !(sigma > 0.0) {
            return Err(Error::Entropy(format!("initial jump {sigma} is not positive")));
        }
        let delta0 = sigma / 6.0;
        let m0 = 2.0 * sobolev_norm(w_bar, 2, &[])?.total;
        let delta1 = 0.25 * (delta0 / (4.0 + coeffs.c1.abs() + coeffs.c2.abs() + m0)).powi(2);
        let mut c = Self {
            m0,
            delta0,
            delta1,
            t_end: 0.0,
            grid: GridSpec::default(),
            tol_inner: 1e-7,
            tol_outer: 1e-8,
            max_inner: 40,
            max_outer: 25,
            hilbert_scale: 1.0,
            allow_long_horizon: false,
        };
        c.t_end = c.default_horizon();
        Ok(c)
    }

    /// min{δ₁/(10δ₀), 1/(2e), 1/(4eM₀)}.
    pub fn horizon_cap(&self) -> f64 {
        (self.delta1 / (10.0 * self.delta0)).min(B_MAX).min(1.0 / (4.0 * E * self.m0))
    }

    pub fn default_horizon(&self) -> f64 {
        0.5 * self.horizon_cap()
    }

    pub fn with_horizon(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    /// Validates the controls; returns warnings for tolerated departures.
    pub fn check(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidInput(format!("horizon {} must be positive", self.t_end)));
        }
        for (name, v) in [("tol_inner", self.tol_inner), ("tol_outer", self.tol_outer)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!("{name} = {v} outside (0, 1)")));
            }
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(Error::InvalidInput("iteration caps must be positive".into()));
        }
        let cap = self.horizon_cap();
        if self.t_end >= cap {
            let msg = format!("horizon T = {} is not below the admissible cap {cap:.3e}", self.t_end);
            if !self.allow_long_horizon {
                return Err(Error::Regime(msg));
            }
            log::warn!("{msg}");
            warnings.push(msg);
        }
        Ok(warnings)
    }
}

/// Graded nodes on [−L, 0] and [0, L]; the shock node appears on both sides.
#[derive(Debug, Clone)]
pub struct SpaceGrid {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl SpaceGrid {
    pub fn graded(spec: &GridSpec) -> Result<Self> {
        let xi = graded_side(spec.h_min, spec.growth, spec.half_width, spec.nodes_per_side)?;
        let left = xi.iter().rev().map(|v| -v).collect();
        Ok(Self { left, right: xi })
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// Number of left nodes; flat index of the right shock node.
    pub fn split(&self) -> usize {
        self.left.len()
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        let nl = self.split();
        if i < nl {
            self.left[i]
        } else {
            self.right[i - nl]
        }
    }

    pub fn side(&self, i: usize) -> Side {
        if i < self.split() {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.left.iter().chain(&self.right).copied().collect()
    }

    pub fn finest_step(&self) -> f64 {
        self.right[1] - self.right[0]
    }

    pub fn window(&self) -> (f64, f64) {
        (self.left[0], *self.right.last().unwrap())
    }

    pub fn stencil(&self, side: Side, x: f64) -> Stencil {
        match side {
            Side::Left => locate(&self.left, 0, x),
            Side::Right => locate(&self.right, self.split(), x),
        }
    }

    /// Spline through flat nodal values with the breakpoint at 0.
    pub fn profile(&self, values: &[f64]) -> Result<PiecewiseRegularFn> {
        let nl = self.split();
        PiecewiseRegularFn::from_pieces(
            self.window(),
            vec![0.0],
            vec![
                (self.left.clone(), values[..nl].to_vec()),
                (self.right.clone(), values[nl..].to_vec()),
            ],
        )
    }

    /// (w(0−), w(0+)) of flat nodal values.
    pub fn traces(&self, values: &[f64]) -> (f64, f64) {
        let nl = self.split();
        (values[nl - 1], values[nl])
    }
}

/// The three parts of the source: F = ε²A + ε(B − C).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParts {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SourceParts {
    pub fn total(&self, eps: f64) -> f64 {
        eps * eps * self.a + eps * (self.b - self.c)
    }
}

/// A snapshot of the solution at one time.
#[derive(Debug, Clone)]
pub struct SingleShockState {
    pub t: f64,
    pub w: PiecewiseRegularFn,
    pub sigma: f64,
    pub sigma_dot: f64,
    pub y_phys: f64,
    pub coeffs: CorrectorCoeffs,
}

impl SingleShockState {
    pub fn new(t: f64, w: PiecewiseRegularFn, sigma_dot: f64, y_phys: f64, coeffs: CorrectorCoeffs) -> Result<Self> {
        let sigma = jump(&w, 0.0)?;
        if !(sigma > 0.0) {
            return Err(Error::Entropy(format!("jump {sigma} at t = {t} is not positive")));
        }
        Ok(Self {
            t,
            w,
            sigma,
            sigma_dot,
            y_phys,
            coeffs,
        })
    }

    pub fn corrector(&self) -> Result<SingleCorrector> {
        SingleCorrector::new(self.coeffs, self.sigma, self.sigma_dot, self.t)
    }

    /// (w⁻ + w⁺)/2.
    pub fn average(&self) -> Result<f64> {
        Ok(0.5 * (trace(&self.w, 0.0, Side::Left)? + trace(&self.w, 0.0, Side::Right)?))
    }
}

/// Transport speed w + φ^(w) − (w⁻ + w⁺)/2 at x ≠ 0.
pub fn speed_single(state: &SingleShockState, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::SingularEvaluation(0.0));
    }
    let corr = state.corrector()?;
    Ok(state.w.eval(x) + corr.value(x) - state.average()?)
}

/// The transport speed of one state, frozen in time.
pub struct StateField<'a> {
    state: &'a SingleShockState,
    corr: SingleCorrector,
    avg: f64,
}

impl<'a> StateField<'a> {
    pub fn new(state: &'a SingleShockState) -> Result<Self> {
        Ok(Self {
            corr: state.corrector()?,
            avg: state.average()?,
            state,
        })
    }
}

impl SpeedField for StateField<'_> {
    fn speed(&self, _t: f64, x: f64, region: u8) -> f64 {
        let side = if region == 0 { Side::Left } else { Side::Right };
        let ph = if x == 0.0 { 0.0 } else { self.corr.value(x) };
        self.state.w.eval_side(x, side) + ph - self.avg
    }

    fn region(&self, _t: f64, x: f64) -> Option<u8> {
        if x < 0.0 {
            Some(0)
        } else if x > 0.0 {
            Some(1)
        } else {
            None
        }
    }

    fn barrier_distance(&self, _t: f64, x: f64) -> f64 {
        x.abs()
    }
}

/// Source parts at x ≠ 0, with H[w] from the spline route.
pub fn assemble_f_single(state: &SingleShockState, x: f64) -> Result<SourceParts> {
    if x == 0.0 {
        return Err(Error::SingularEvaluation(0.0));
    }
    let corr = state.corrector()?;
    let w = state.w.eval(x);
    let avg = state.average()?;
    let left = x < 0.0;
    let phi_x = corr.dx(x);
    let a = corr.hilbert(x)? - corr.value(x) * phi_x;
    let b = hilbert_piecewise(&state.w, x)? - (w - avg) * phi0_dx(x);
    let offset_dx = corr.offset_dx_side(x, left);
    let c = if offset_dx == 0.0 && corr.offset() == 0.0 {
        0.0
    } else {
        corr.dt(x)? + (w - avg) * offset_dx
    };
    Ok(SourceParts { a, b, c })
}

/// (1/π)[(η−1)ln|x| + η + sign(x)η′|x|ln|x|]: the shock's own log term folded
/// into the slope correction, finite at 0.
pub(crate) fn folded_log(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0 / PI;
    }
    let a = x.abs();
    let l = a.ln();
    let e = eta(x);
    ((e - 1.0) * l + e + x.signum() * eta_dx(x) * a * l) / PI
}

/// H[g_b](±x) at the grid nodes for one offset.
#[derive(Debug, Clone)]
struct OffsetTransforms {
    b: f64,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl OffsetTransforms {
    fn compute(x: &[f64], b: f64) -> Result<Self> {
        let pairs: Result<Vec<(f64, f64)>> = x
            .par_iter()
            .map(|&v| Ok((hilbert_gb(b, v, 0)?, hilbert_gb(b, -v, 0)?)))
            .collect();
        let (plus, minus) = pairs?.into_iter().unzip();
        Ok(Self { b, plus, minus })
    }
}

/// Grid-based source assembly with the singular parts handled in closed form.
#[derive(Debug, Clone)]
struct SourceAssembler {
    grid: SpaceGrid,
    x: Vec<f64>,
    hilbert: LinearHilbert,
    folded: Vec<f64>,
    phi0: Vec<f64>,
    phi0_dx: Vec<f64>,
    h_phi0: Vec<f64>,
    coeffs: CorrectorCoeffs,
    eps: f64,
}

impl SourceAssembler {
    fn new(grid: &SpaceGrid, coeffs: CorrectorCoeffs, eps: f64, cached: bool) -> Result<Self> {
        let x = grid.nodes();
        let mut hilbert = LinearHilbert::new(vec![grid.left.clone(), grid.right.clone()], x.clone());
        if cached {
            hilbert = hilbert.with_cache();
        }
        let h_phi0 = x.par_iter().map(|&v| hilbert_phi0(v)).collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            grid: grid.clone(),
            folded: x.iter().map(|&v| folded_log(v)).collect(),
            phi0: x.iter().map(|&v| phi0(v)).collect(),
            phi0_dx: x.iter().map(|&v| phi0_dx(v)).collect(),
            h_phi0,
            hilbert,
            x,
            coeffs,
            eps,
        })
    }

    fn plain(&self) -> bool {
        self.coeffs.c1 == 1.0 && self.coeffs.c2 == 1.0
    }

    fn source(&self, w: &[f64], sigma_dot: f64, t: f64, offsets: Option<&OffsetTransforms>) -> Result<Vec<f64>> {
        let nl = self.grid.split();
        let (wl, wr) = self.grid.traces(w);
        let sigma = wl - wr;
        let avg = 0.5 * (wl + wr);
        let corr = SingleCorrector::new(self.coeffs, sigma, sigma_dot, t)?;
        let b_off = corr.offset();
        let hreg = self.hilbert.apply(&[w[..nl].to_vec(), w[nl..].to_vec()]);
        let eps = self.eps;
        let (e1, e2) = (self.coeffs.c1 - 1.0, self.coeffs.c2 - 1.0);
        (0..w.len())
            .map(|i| {
                let left = i < nl;
                let x = self.x[i];
                let ws = if left { wl } else { wr };
                let b = hreg[i] + sigma * self.folded[i] - (w[i] - ws) * self.phi0_dx[i];
                let excess = if left { e1 } else { e2 };
                let (c, phi_val, phi_x, h_phi) = if excess == 0.0 && self.plain() {
                    (0.0, self.phi0[i], self.phi0_dx[i], self.h_phi0[i])
                } else {
                    let off = offsets.ok_or_else(|| Error::Numerical("offset transforms missing".into()))?;
                    let offset_dx = corr.offset_dx_side(x, left);
                    let c = if excess == 0.0 {
                        0.0
                    } else {
                        corr.dt(x)? + (w[i] - avg) * offset_dx
                    };
                    let phi_val = self.phi0[i] + excess * phi(x, b_off);
                    let h_phi = self.h_phi0[i] - e1 * off.minus[i] + e2 * off.plus[i];
                    (c, phi_val, self.phi0_dx[i] + offset_dx, h_phi)
                };
                let a = h_phi - phi_val * phi_x;
                Ok(eps * eps * a + eps * (b - c))
            })
            .collect()
    }
}

/// F at every node of a grid profile, built from the grid's product-integration Hilbert operator.
pub fn source_on_grid(
    grid: &SpaceGrid,
    w: &[f64],
    t: f64,
    sigma_dot: f64,
    coeffs: CorrectorCoeffs,
    eps: f64,
) -> Result<Vec<f64>> {
    let asm = SourceAssembler::new(grid, coeffs, eps, false)?;
    let offsets = if asm.plain() {
        None
    } else {
        let (wl, wr) = grid.traces(w);
        Some(OffsetTransforms::compute(&asm.x, 0.5 * (wl - wr) * t)?)
    };
    asm.source(w, sigma_dot, t, offsets.as_ref())
}

/// Speed field of a frozen iterate, linear in time between levels.
struct FrozenField<'a> {
    grid: &'a SpaceGrid,
    times: &'a [f64],
    rel: &'a [Vec<f64>],
    sigma: &'a [f64],
    coeffs: CorrectorCoeffs,
    eps: f64,
}

impl SpeedField for FrozenField<'_> {
    fn speed(&self, t: f64, x: f64, region: u8) -> f64 {
        let side = if region == 0 { Side::Left } else { Side::Right };
        let n = self.times.len();
        let m = self.times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let th = ((t - self.times[m]) / (self.times[m + 1] - self.times[m])).clamp(0.0, 1.0);
        let st = self.grid.stencil(side, x);
        let v = (1.0 - th) * st.apply(&self.rel[m]) + th * st.apply(&self.rel[m + 1]);
        let sig = (1.0 - th) * self.sigma[m] + th * self.sigma[m + 1];
        let b = (0.5 * sig * t).clamp(0.0, B_MAX);
        let excess = match side {
            Side::Left => self.coeffs.c1 - 1.0,
            Side::Right => self.coeffs.c2 - 1.0,
        };
        let mut ph = phi(x, 0.0);
        if excess != 0.0 {
            ph += excess * phi(x, b);
        }
        v + self.eps * ph
    }

    fn region(&self, _t: f64, x: f64) -> Option<u8> {
        if x < 0.0 {
            Some(0)
        } else if x > 0.0 {
            Some(1)
        } else {
            None
        }
    }

    fn barrier_distance(&self, _t: f64, x: f64) -> f64 {
        x.abs()
    }
}

/// Per-inner-loop histories.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InnerHistory {
    /// sup_t ‖w^(k)‖_{H²(ℝ∖{0})}.
    pub norm_history: Vec<f64>,
    /// β_k = sup_t ‖w^(k+1) − w^(k)‖_{H²(ℝ∖{0})}.
    pub diff_history: Vec<f64>,
    /// α_k = sup_t |σ̇^(k)| before clamping.
    pub trace_rate_history: Vec<f64>,
}

impl InnerHistory {
    /// (β_{k+1} + β_k/2)/(β_k + β_{k−1}/2), or β₁/β₀ for the first pair,
    /// skipping pairs that reach the noise floor.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        let b = &self.diff_history;
        let mut out = Vec::new();
        for k in 0..b.len().saturating_sub(1) {
            if b[k + 1] < NOISE_FLOOR_H2 || b[k] < NOISE_FLOOR_H2 {
                break;
            }
            out.push(if k == 0 {
                b[1] / b[0]
            } else {
                (b[k + 1] + 0.5 * b[k]) / (b[k] + 0.5 * b[k - 1])
            });
        }
        out
    }
}

/// Iteration diagnostics of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub inner: Vec<InnerHistory>,
    /// sup_t ‖w_{n+1} − w_n‖_{H¹(ℝ∖{0})}.
    pub outer_diff_history: Vec<f64>,
    /// Surrogate for C₁ fitted on the first inner pass.
    pub fitted_c1: f64,
    /// Half levels where σ̇ hit its envelope.
    pub clamped_rates: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl IterationReport {
    /// All inner ratios above the noise floor.
    pub fn inner_ratios(&self) -> Vec<f64> {
        self.inner.iter().flat_map(|h| h.contraction_ratios()).collect()
    }

    pub fn outer_ratios(&self) -> Vec<f64> {
        self.outer_diff_history
            .windows(2)
            .take_while(|w| w[0] >= NOISE_FLOOR_H1 && w[1] >= NOISE_FLOOR_H1)
            .map(|w| w[1] / w[0])
            .collect()
    }

    /// Largest measured inner ratio.
    pub fn inner_contraction(&self) -> Option<f64> {
        self.inner_ratios().into_iter().reduce(f64::max)
    }

    pub fn outer_contraction(&self) -> Option<f64> {
        self.outer_ratios().into_iter().reduce(f64::max)
    }

    pub fn inner_iterations(&self) -> usize {
        self.inner.iter().map(|h| h.diff_history.len()).sum()
    }
}

/// Trajectory of a converged single-shock run on the solver's grids.
#[derive(Debug, Clone)]
pub struct SingleShockSolution {
    pub grid: SpaceGrid,
    pub times: Vec<f64>,
    /// w at the nodes, one flat vector per level.
    pub w: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub sigma_dot: Vec<f64>,
    pub y_phys: Vec<f64>,
    pub coeffs: CorrectorCoeffs,
    pub constants: SolverConstants,
    pub report: IterationReport,
    w_bar: PiecewiseRegularFn,
    f_half: Vec<Vec<f64>>,
}

impl SingleShockSolution {
    pub fn levels(&self) -> usize {
        self.times.len()
    }

    pub fn initial(&self) -> &PiecewiseRegularFn {
        &self.w_bar
    }

    /// Source on the half levels of the final iterate.
    pub fn source_half_levels(&self) -> &[Vec<f64>] {
        &self.f_half
    }

    pub fn corrector(&self, level: usize) -> Result<SingleCorrector> {
        SingleCorrector::new(self.coeffs, self.sigma[level], self.sigma_dot[level], self.times[level])
    }

    pub fn profile(&self, level: usize) -> Result<PiecewiseRegularFn> {
        self.grid.profile(&self.w[level])
    }

    pub fn state(&self, level: usize) -> Result<SingleShockState> {
        SingleShockState::new(
            self.times[level],
            self.profile(level)?,
            self.sigma_dot[level],
            self.y_phys[level],
            self.coeffs,
        )
    }

    /// ε·φ^(w) at flat node i of a level.
    pub fn corrector_at_node(&self, level: usize, i: usize) -> Result<f64> {
        let corr = self.corrector(level)?;
        let x = self.grid.x(i);
        let v = if x == 0.0 { 0.0 } else { corr.value(x) };
        Ok(self.constants.hilbert_scale * v)
    }

    /// u = w + εφ^(w) at the nodes of a level.
    pub fn u_nodes(&self, level: usize) -> Result<Vec<f64>> {
        (0..self.grid.len())
            .map(|i| Ok(self.w[level][i] + self.corrector_at_node(level, i)?))
            .collect()
    }

    /// u at frame position x ≠ 0 of a level.
    pub fn u_at(&self, level: usize, profile: &PiecewiseRegularFn, x: f64) -> Result<f64> {
        let corr = self.corrector(level)?;
        let side = if x < 0.0 { Side::Left } else { Side::Right };
        Ok(profile.eval_side(x, side) + self.constants.hilbert_scale * corr.value(x))
    }

    /// u at physical position x of a level (frame shifted by the shock path).
    pub fn u_physical(&self, level: usize, profile: &PiecewiseRegularFn, x: f64) -> Result<f64> {
        self.u_at(level, profile, x - self.y_phys[level])
    }

    /// Checks the integral identity w(t, x) = w̄(foot) + ∫F along characteristics
    /// through off-node points, skipping one space step around the shock.
    pub fn integral_identity(&self, level_stride: usize, node_stride: usize) -> Result<IdentityCheck> {
        let eps = self.constants.hilbert_scale;
        let rel: Vec<Vec<f64>> = self.w.iter().map(|w| relative(&self.grid, w)).collect();
        let field = FrozenField {
            grid: &self.grid,
            times: &self.times,
            rel: &rel,
            sigma: &self.sigma,
            coeffs: self.coeffs,
            eps,
        };
        let opts = trace_options(&self.grid, &self.times, &rel, self.coeffs, eps);
        let band = self.grid.finest_step();
        let n = self.levels();
        let dt: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        let mut levels: Vec<usize> = (1..n).step_by(level_stride.max(1)).collect();
        if levels.last() != Some(&(n - 1)) {
            levels.push(n - 1);
        }
        let nodes = self.grid.nodes();
        let mut worst = 0.0f64;
        let mut checked = 0usize;
        for &j in &levels {
            let profile = self.profile(j)?;
            let stops = stops_for(&self.times, j);
            let targets: Vec<(f64, Side)> = (0..nodes.len() - 1)
                .step_by(node_stride.max(1))
                .filter(|&i| self.grid.side(i) == self.grid.side(i + 1))
                .map(|i| (0.5 * (nodes[i] + nodes[i + 1]), self.grid.side(i)))
                .filter(|&(x, _)| x.abs() > band)
                .collect();
            let errs: Result<Vec<f64>> = targets
                .par_iter()
                .map(|&(x0, side)| {
                    let region = if side == Side::Left { 0 } else { 1 };
                    let mut acc = 0.0;
                    let mut foot = 0.0;
                    trace_back(&field, self.times[j], x0, region, &stops, &opts, |k, x| {
                        if k % 2 == 0 {
                            let m = j - 1 - k / 2;
                            acc += dt[m] * self.grid.stencil(side, x).apply(&self.f_half[m]);
                        } else if k == stops.len() - 1 {
                            foot = foot_value(&self.w_bar, x, side);
                        }
                    })?;
                    Ok((foot + acc - profile.eval_side(x0, side)).abs())
                })
                .collect();
            for e in errs? {
                worst = worst.max(e);
                checked += 1;
            }
        }
        Ok(IdentityCheck {
            max_error: worst,
            band,
            checked,
        })
    }
}

/// Outcome of [`SingleShockSolution::integral_identity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub max_error: f64,
    pub band: f64,
    pub checked: usize,
}

fn relative(grid: &SpaceGrid, w: &[f64]) -> Vec<f64> {
    let (l, r) = grid.traces(w);
    let avg = 0.5 * (l + r);
    w.iter().map(|v| v - avg).collect()
}

fn foot_value(w_bar: &PiecewiseRegularFn, x: f64, side: Side) -> f64 {
    let (lo, hi) = w_bar.window();
    w_bar.eval_side(x.clamp(lo, hi), side)
}

/// [t_{j−½}, t_{j−1}, …, t_½, t_0].
pub(crate) fn stops_for(times: &[f64], j: usize) -> Vec<f64> {
    let mut s = Vec::with_capacity(2 * j);
    for m in (0..j).rev() {
        s.push(0.5 * (times[m] + times[m + 1]));
        s.push(times[m]);
    }
    s
}

fn trace_options(grid: &SpaceGrid, times: &[f64], rel: &[Vec<f64>], coeffs: CorrectorCoeffs, eps: f64) -> TraceOptions {
    let wmax = rel.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let cmax = 1.0 + (coeffs.c1 - 1.0).abs().max((coeffs.c2 - 1.0).abs());
    let phimax = cmax * grid.nodes().iter().fold(0.0f64, |a, &x| a.max(phi0(x).abs())) + 0.05;
    TraceOptions {
        vmax: (wmax + eps.abs() * phimax).max(1e-3),
        h_min: (times[1] - times[0]) / 64.0,
        max_steps: 1_000_000,
    }
}

/// y(t) = y₀ + ∫₀ᵗ (u⁻ + u⁺)/2 by the trapezoid rule on the given times.
pub fn recover_shock_position(times: &[f64], u_minus: &[f64], u_plus: &[f64], y0: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(times.len());
    let mut acc = y0;
    for k in 0..times.len() {
        if k > 0 {
            let s0 = 0.5 * (u_minus[k - 1] + u_plus[k - 1]);
            let s1 = 0.5 * (u_minus[k] + u_plus[k]);
            acc += 0.5 * (times[k] - times[k - 1]) * (s0 + s1);
        }
        y.push(acc);
    }
    y
}

/// A-priori monitors of one iterate.
struct Monitor<'a> {
    grid: &'a SpaceGrid,
    traces0: (f64, f64),
    delta0: f64,
    m0: f64,
}

impl Monitor<'_> {
    /// sup_t H² norm; errors when a bound fails.
    fn check(&self, w: &[Vec<f64>], times: &[f64]) -> Result<f64> {
        let norms = w
            .par_iter()
            .map(|v| Ok(sobolev_norm(&self.grid.profile(v)?, 2, &[])?.total))
            .collect::<Result<Vec<f64>>>()?;
        for (j, v) in w.iter().enumerate() {
            let (l, r) = self.grid.traces(v);
            if !(l > r) {
                return Err(Error::Entropy(format!("jump {} at t = {} is not positive", l - r, times[j])));
            }
            let drift = (l - self.traces0.0).abs().max((r - self.traces0.1).abs());
            if drift > self.delta0 {
                return Err(Error::Regime(format!(
                    "trace drift {drift:.3e} exceeds δ₀ = {:.3e} at t = {}",
                    self.delta0, times[j]
                )));
            }
            if norms[j] > self.m0 {
                return Err(Error::Regime(format!(
                    "H² norm {:.4} exceeds M₀ = {:.4} at t = {}",
                    norms[j], self.m0, times[j]
                )));
            }
        }
        Ok(norms.into_iter().fold(0.0, f64::max))
    }
}

fn sup_diff(grid: &SpaceGrid, a: &[Vec<f64>], b: &[Vec<f64>], order: usize) -> Result<f64> {
    let d = a
        .par_iter()
        .zip(b)
        .map(|(x, y)| {
            let diff: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            Ok(sobolev_norm(&grid.profile(&diff)?, order, &[])?.total)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// State shared by the two loops.
struct Run<'a> {
    grid: SpaceGrid,
    times: Vec<f64>,
    dt: Vec<f64>,
    t_half: Vec<f64>,
    w_bar: &'a PiecewiseRegularFn,
    w_bar_nodes: Vec<f64>,
    coeffs: CorrectorCoeffs,
    constants: &'a SolverConstants,
    asm: SourceAssembler,
    offsets: Vec<Option<OffsetTransforms>>,
    c1: Option<f64>,
    clamped: usize,
}

impl Run<'_> {
    fn sigmas(&self, w: &[Vec<f64>]) -> Vec<f64> {
        w.iter()
            .map(|v| {
                let (l, r) = self.grid.traces(v);
                l - r
            })
            .collect()
    }

    /// Raw and clamped σ̇ on half levels.
    fn sigma_rates(&mut self, sigma: &[f64]) -> (Vec<f64>, f64) {
        let m0 = self.constants.m0;
        let mut raw_max = 0.0f64;
        let rates = (0..self.dt.len())
            .map(|m| {
                let raw = (sigma[m + 1] - sigma[m]) / self.dt[m];
                raw_max = raw_max.max(raw.abs());
                match self.c1 {
                    Some(c1) => {
                        let cap = 4.0 * c1 * (1.0 + m0) * self.t_half[m].ln().abs();
                        if raw.abs() > cap {
                            self.clamped += 1;
                            raw.clamp(-cap, cap)
                        } else {
                            raw
                        }
                    }
                    None => raw,
                }
            })
            .collect();
        (rates, raw_max)
    }

    /// F on all half levels of an iterate.
    fn sources(&mut self, w: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
        let sigma = self.sigmas(w);
        let (rates, raw_max) = self.sigma_rates(&sigma);
        let halves: Vec<Vec<f64>> = w
            .windows(2)
            .map(|p| p[0].iter().zip(&p[1]).map(|(a, b)| 0.5 * (a + b)).collect())
            .collect();
        if !self.asm.plain() {
            let stale: Vec<(usize, f64)> = halves
                .iter()
                .enumerate()
                .filter_map(|(m, h)| {
                    let (l, r) = self.grid.traces(h);
                    let b = 0.5 * (l - r) * self.t_half[m];
                    match &self.offsets[m] {
                        Some(o) if (o.b - b).abs() <= 1e-10 * b => None,
                        _ => Some((m, b)),
                    }
                })
                .collect();
            let x = &self.asm.x;
            let fresh = stale
                .par_iter()
                .map(|&(m, b)| Ok((m, OffsetTransforms::compute(x, b)?)))
                .collect::<Result<Vec<_>>>()?;
            for (m, o) in fresh {
                self.offsets[m] = Some(o);
            }
        }
        let asm = &self.asm;
        let offsets = &self.offsets;
        let t_half = &self.t_half;
        let f = halves
            .par_iter()
            .enumerate()
            .map(|(m, h)| asm.source(h, rates[m], t_half[m], offsets[m].as_ref()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        if self.c1.is_none() {
            let m0 = self.constants.m0;
            let mut c1 = 0.0f64;
            for (m, fm) in f.iter().enumerate() {
                let env = (1.0 + m0) * self.t_half[m].ln().abs();
                for (i, v) in fm.iter().enumerate() {
                    if self.asm.x[i].abs() < B_MAX {
                        c1 = c1.max(v.abs() / env);
                    }
                }
            }
            self.c1 = Some(c1);
        }
        Ok((f, raw_max))
    }

    /// Traces all characteristics of the frozen iterate.
    fn characteristics(&self, w: &[Vec<f64>]) -> Result<CharacteristicMap> {
        let eps = self.constants.hilbert_scale;
        let rel: Vec<Vec<f64>> = w.iter().map(|v| relative(&self.grid, v)).collect();
        let sigma = self.sigmas(w);
        let field = FrozenField {
            grid: &self.grid,
            times: &self.times,
            rel: &rel,
            sigma: &sigma,
            coeffs: self.coeffs,
            eps,
        };
        let opts = trace_options(&self.grid, &self.times, &rel, self.coeffs, eps);
        let n = self.grid.len();
        let mut feet = vec![self.w_bar_nodes.clone()];
        let mut stencils = vec![vec![Vec::new(); n]];
        for j in 1..self.times.len() {
            let stops = stops_for(&self.times, j);
            let traced = (0..n)
                .into_par_iter()
                .map(|i| {
                    let side = self.grid.side(i);
                    let region = if side == Side::Left { 0 } else { 1 };
                    let mut st = vec![Stencil::default(); j];
                    let mut foot = 0.0;
                    trace_back(&field, self.times[j], self.grid.x(i), region, &stops, &opts, |k, x| {
                        if k % 2 == 0 {
                            st[j - 1 - k / 2] = self.grid.stencil(side, x);
                        } else if k == stops.len() - 1 {
                            foot = foot_value(self.w_bar, x, side);
                        }
                    })?;
                    Ok((foot, st))
                })
                .collect::<Result<Vec<(f64, Vec<Stencil>)>>>()?;
            let (f, s): (Vec<f64>, Vec<Vec<Stencil>>) = traced.into_iter().unzip();
            feet.push(f);
            stencils.push(s);
        }
        Ok(CharacteristicMap { feet, stencils })
    }

    /// Inner fixed point for the frozen characteristics, warm-started at `start`.
    fn inner(
        &mut self,
        map: &CharacteristicMap,
        start: Vec<Vec<f64>>,
        monitor: &Monitor,
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, InnerHistory)> {
        let mut hist = InnerHistory::default();
        let mut w = start;
        for _ in 0..self.constants.max_inner {
            let (f, raw) = self.sources(&w)?;
            let next = map.integrate(&f, &self.dt);
            let beta = sup_diff(&self.grid, &next, &w, 2)?;
            let norm = monitor.check(&next, &self.times)?;
            hist.norm_history.push(norm);
            hist.diff_history.push(beta);
            hist.trace_rate_history.push(raw);
            w = next;
            if beta < self.constants.tol_inner {
                let (f, _) = self.sources(&w)?;
                return Ok((w, f, hist));
            }
        }
        Err(Error::NonConvergence {
            iterations: self.constants.max_inner,
            last_diff: *hist.diff_history.last().unwrap_or(&f64::NAN),
        })
    }
}

/// Solves from w̄ (breakpoint at 0) to the horizon in `constants`.
pub fn outer_solve(
    w_bar: &PiecewiseRegularFn,
    coeffs: CorrectorCoeffs,
    constants: &SolverConstants,
) -> Result<SingleShockSolution> {
    solve_from(w_bar, coeffs, constants, 0.0)
}

/// [`outer_solve`] with the physical shock starting at `y0`.
pub fn solve_from(
    w_bar: &PiecewiseRegularFn,
    coeffs: CorrectorCoeffs,
    constants: &SolverConstants,
    y0: f64,
) -> Result<SingleShockSolution> {
    let warnings = constants.check()?;
    if w_bar.breakpoints() != [0.0] {
        return Err(Error::InvalidInput("initial data must have its only breakpoint at 0".into()));
    }
    let grid = SpaceGrid::graded(&constants.grid)?;
    let g = &constants.grid;
    let times = geometric_time_grid(constants.t_end, g.finest_step, g.time_ratio, g.max_step)?;
    let dt: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let t_half: Vec<f64> = times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let w_bar_nodes: Vec<f64> = (0..grid.len())
        .map(|i| foot_value(w_bar, grid.x(i), grid.side(i)))
        .collect();
    let traces0 = grid.traces(&w_bar_nodes);
    if !(traces0.0 > traces0.1) {
        return Err(Error::Entropy("initial jump is not positive".into()));
    }
    let asm = SourceAssembler::new(&grid, coeffs, constants.hilbert_scale, true)?;
    let mut run = Run {
        offsets: vec![None; dt.len()],
        grid: grid.clone(),
        times: times.clone(),
        dt,
        t_half,
        w_bar,
        w_bar_nodes: w_bar_nodes.clone(),
        coeffs,
        constants,
        asm,
        c1: None,
        clamped: 0,
    };
    let monitor = Monitor {
        grid: &grid,
        traces0,
        delta0: constants.delta0,
        m0: constants.m0,
    };
    let mut report = IterationReport {
        warnings,
        ..Default::default()
    };
    let mut w = vec![w_bar_nodes; times.len()];
    let mut f_half = Vec::new();
    for n in 0..constants.max_outer {
        let map = run.characteristics(&w).map_err(|e| e.at_stage("characteristics"))?;
        let (next, f, hist) = run.inner(&map, w.clone(), &monitor).map_err(|e| e.at_stage("inner iteration"))?;
        let d = sup_diff(&grid, &next, &w, 1)?;
        log::info!(
            "outer {n}: H¹ change {d:.3e} after {} inner iterations",
            hist.diff_history.len()
        );
        report.inner.push(hist);
        report.outer_diff_history.push(d);
        w = next;
        f_half = f;
        if d < constants.tol_outer && report.outer_ratios().last().is_none_or(|&r| r < 1.0) {
            report.converged = true;
            break;
        }
    }
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: constants.max_outer,
            last_diff: *report.outer_diff_history.last().unwrap_or(&f64::NAN),
        });
    }
    report.fitted_c1 = run.c1.unwrap_or(0.0);
    report.clamped_rates = run.clamped;
    let sigma = run.sigmas(&w);
    let mut sigma_dot = vec![0.0; times.len()];
    for k in 1..times.len() {
        sigma_dot[k] = (sigma[k] - sigma[k - 1]) / (times[k] - times[k - 1]);
    }
    if times.len() > 1 {
        sigma_dot[0] = sigma_dot[1];
    }
    let (um, up): (Vec<f64>, Vec<f64>) = w.iter().map(|v| grid.traces(v)).unzip();
    let y_phys = recover_shock_position(&times, &um, &up, y0);
    Ok(SingleShockSolution {
        grid,
        times,
        w,
        sigma,
        sigma_dot,
        y_phys,
        coeffs,
        constants: constants.clone(),
        report,
        w_bar: w_bar.clone(),
        f_half,
    })
}

/// w̄(x) = −(jump/2)·sign(x)·(1 − tanh(|x|/ℓ)) on `window`, with ℓ on the
/// smooth branch chosen so that ‖w̄‖_{H²(ℝ∖{0})} = `norm`.
pub fn tanh_preset(jump: f64, norm: f64, window: (f64, f64)) -> Result<PiecewiseRegularFn> {
    let build = |ell: f64| {
        PiecewiseRegularFn::from_fn(window, vec![0.0], 2049, |piece, x| {
            let s = if piece == 0 { -1.0 } else { 1.0 };
            -0.5 * jump * s * (1.0 - (x.abs() / ell).tanh())
        })
    };
    let norm_of = |ell: f64| -> Result<f64> { Ok(sobolev_norm(&build(ell)?, 2, &[])?.total) };
    // the norm has one minimum in ℓ; search to its right
    let mut lo = 0.05;
    let mut best = norm_of(lo)?;
    let mut ell = lo;
    while ell < 50.0 {
        ell *= 1.1;
        let v = norm_of(ell)?;
        if v > best {
            break;
        }
        best = v;
        lo = ell;
    }
    if best > norm {
        return Err(Error::InvalidInput(format!(
            "no tanh profile with jump {jump} has H² norm as small as {norm}"
        )));
    }
    let mut hi = lo.max(1.0);
    while norm_of(hi)? < norm {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::InvalidInput("tanh preset width diverged".into()));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if norm_of(mid)? < norm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    build(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folded_log_matches_direct_form_inside_plateau() {
        for x in [-0.7, -1e-3, 2e-4, 0.9] {
            assert!((folded_log(x) - 1.0 / PI).abs() < 1e-15);
        }
    }

    #[test]
    fn stops_interleave_half_levels() {
        let s = stops_for(&[0.0, 1.0, 3.0], 2);
        assert_eq!(s, vec![2.0, 1.0, 0.5, 0.0]);
    }
}
