//! Two approaching shocks in the interaction frame: the left shock sits at
//! x = t, the right one at x = 0, and they meet at t = 0. Time and space are
//! rescaled so both shock speeds are exactly 1 and 0; the merged state is then
//! handed to the single-shock solver.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{locate, trace_back, CharacteristicMap, SpeedField, Stencil, TraceOptions};
use crate::correctors::{
    eta, handoff_coeffs, phi0_dx, CorrectorCoeffs, Region, ShockStrengths, TwoShockBasisPoint, TwoShockCorrector, B_MAX,
};
use crate::error::{Error, Result};
use crate::function_core::{
    hilbert_piecewise, jump, sobolev_norm, trace, trace_slope, uniform_nodes, LinearHilbert, PiecewiseRegularFn, Side,
};
use crate::grid::{approach_time_grid, graded_side};
use crate::single_shock::{
    folded_log, solve_from, stops_for, tanh_preset, GridSpec, InnerHistory, IterationReport, SingleShockSolution,
    SolverConstants,
};

/// Frame time of the symmetric preset.
pub const PRESET_TAU0: f64 = -0.05;

/// Space and time resolution in the interaction frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameGridSpec {
    /// Nodes in each outer block, the shock node included.
    pub nodes_per_side: usize,
    /// Fixed node count of the band between the shocks.
    pub middle_nodes: usize,
    pub h_min: f64,
    pub growth: f64,
    pub half_width: f64,
    /// Ratio between successive |τ| near the collision.
    pub time_ratio: f64,
    /// Last frame time as a fraction of τ₀.
    pub end_fraction: f64,
    /// Largest time step as a fraction of |τ₀|.
    pub max_step: f64,
}

impl Default for FrameGridSpec {
    fn default() -> Self {
        Self {
            nodes_per_side: 256,
            middle_nodes: 64,
            h_min: 1e-5,
            growth: 1.08,
            half_width: 8.0,
            time_ratio: 0.8,
            end_fraction: 1e-6,
            max_step: 0.2,
        }
    }
}

/// γ₀, γ₁ and the neighbourhood δ̄ on which the speed bounds are checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeConstants {
    pub gamma0: f64,
    pub gamma1: f64,
    pub delta_bar: f64,
    delta1: f64,
    delta2: f64,
}

impl ConeConstants {
    pub fn new(delta1: f64, delta2: f64, delta_bar: f64) -> Self {
        let d0 = delta1.min(delta2);
        let (p, q) = (delta1 + 2.0 * delta2, 2.0 * delta1 + delta2);
        let dm = delta1.max(delta2);
        Self {
            gamma0: (d0 / (2.0 * p)).min(d0 / (2.0 * q)),
            gamma1: (5.0 * dm / (2.0 * p)).max(5.0 * dm / (2.0 * q)),
            delta_bar,
            delta1,
            delta2,
        }
    }

    /// Radius γ₀(τ − t) of both cone intervals.
    pub fn radius(&self, tau: f64, t: f64) -> f64 {
        self.gamma0 * (tau - t)
    }

    /// Whether x at time t lies in I_t^τ.
    pub fn contains(&self, tau: f64, t: f64, x: f64) -> bool {
        let r = self.radius(tau, t);
        (x - t).abs() <= r || x.abs() <= r
    }

    /// Admissible range of the frame speed within δ̄ of a shock, per region.
    pub fn speed_bounds(&self, region: Region) -> (f64, f64) {
        let (d1, d2) = (self.delta1, self.delta2);
        let d0 = d1.min(d2);
        match region {
            Region::Right => (-5.0 * d2 / (2.0 * d1 + 4.0 * d2), -d2 / (4.0 * d1 + 2.0 * d2)),
            Region::Middle => (
                1.0 - (4.0 * d1 + d0) / (4.0 * d1 + 2.0 * d2),
                1.0 - (2.0 * d1 - d0) / (2.0 * d1 + 4.0 * d2),
            ),
            Region::Left => (1.0 + d1 / (2.0 * d1 + 4.0 * d2), 1.0 + 5.0 * d1 / (4.0 * d1 + 2.0 * d2)),
        }
    }
}

/// Constants of the two-shock construction plus numerical controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoShockConstants {
    /// Floor on the left shock strength.
    pub delta1: f64,
    /// Floor on the right shock strength.
    pub delta2: f64,
    pub m0: f64,
    /// Slope bound in the band between the shocks.
    pub b: f64,
    pub delta_bar: f64,
    pub grid: FrameGridSpec,
    pub tol_inner: f64,
    pub tol_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub hilbert_scale: f64,
}

impl Default for TwoShockConstants {
    fn default() -> Self {
        Self::symmetric_preset()
    }
}

impl TwoShockConstants {
    pub fn symmetric_preset() -> Self {
        Self {
            delta1: 0.25,
            delta2: 0.25,
            m0: 2.0,
            b: 1.0,
            delta_bar: 1e-2,
            grid: FrameGridSpec::default(),
            tol_inner: 1e-7,
            tol_outer: 1e-8,
            max_inner: 40,
            max_outer: 25,
            hilbert_scale: 1.0,
        }
    }

    pub fn delta0(&self) -> f64 {
        self.delta1.min(self.delta2)
    }

    pub fn cone(&self) -> ConeConstants {
        ConeConstants::new(self.delta1, self.delta2, self.delta_bar)
    }

    /// ¼·min(δ₁², δ₂²)/M₀², the admissible size of |τ₀|.
    pub fn tau0_cap(&self) -> f64 {
        0.25 * self.delta0().powi(2) / (self.m0 * self.m0)
    }

    pub fn default_tau0(&self) -> f64 {
        -0.5 * self.tau0_cap().min(0.1)
    }

    /// In-regime range of a₁ − a₂.
    pub fn gap_bounds(&self) -> (f64, f64) {
        let s = self.delta1 + self.delta2;
        (2.0 * s, 6.0 * s)
    }

    /// Validates the controls and the data; returns warnings for hypotheses the
    /// data does not meet but the monitors can still police.
    pub fn check(&self, w_bar: &PiecewiseRegularFn) -> Result<Vec<String>> {
        for (name, v) in [("delta1", self.delta1), ("delta2", self.delta2), ("m0", self.m0), ("b", self.b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("tol_inner", self.tol_inner), ("tol_outer", self.tol_outer)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!("{name} = {v} outside (0, 1)")));
            }
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(Error::InvalidInput("iteration caps must be positive".into()));
        }
        let tau0 = frame_start(w_bar)?;
        let (s1, s2) = (jump(w_bar, tau0)?, jump(w_bar, 0.0)?);
        if !(s1 > 0.0 && s2 > 0.0) {
            return Err(Error::Entropy(format!("initial strengths {s1}, {s2} must be positive")));
        }
        if s1 < self.delta1 || s2 < self.delta2 {
            return Err(Error::Regime(format!(
                "initial strengths {s1:.4}, {s2:.4} below the floors {}, {}",
                self.delta1, self.delta2
            )));
        }
        let mut warnings = Vec::new();
        if s1 < 8.0 * self.delta1 || s2 < 8.0 * self.delta2 {
            warnings.push(format!("initial strengths {s1:.4}, {s2:.4} are below 8δ₁, 8δ₂"));
        }
        let norm = sobolev_norm(w_bar, 2, &[])?.total;
        if norm > 0.25 * self.m0 {
            warnings.push(format!("‖w̄‖_H² = {norm:.4} exceeds M₀/4 = {:.4}", 0.25 * self.m0));
        }
        let slope = band_slope(w_bar);
        if slope > self.b {
            warnings.push(format!("band slope {slope:.4} exceeds b = {}", self.b));
        }
        if -tau0 >= self.tau0_cap() {
            warnings.push(format!(
                "τ₀ = {tau0} is not above −¼min(δ₁²,δ₂²)/M₀² = {:.3e}",
                -self.tau0_cap()
            ));
        }
        let (lo, hi) = self.gap_bounds();
        let gap = 0.5 * (trace(w_bar, tau0, Side::Left)? + trace(w_bar, tau0, Side::Right)?)
            - 0.5 * (trace(w_bar, 0.0, Side::Left)? + trace(w_bar, 0.0, Side::Right)?);
        if !(gap > 0.0) {
            return Err(Error::NotApproaching {
                a1: gap,
                a2: 0.0,
            });
        }
        if gap < lo || gap > hi {
            warnings.push(format!("a₁ − a₂ = {gap:.4} outside [{lo}, {hi}]"));
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }
}

fn frame_start(w: &PiecewiseRegularFn) -> Result<f64> {
    match w.breakpoints() {
        [t, z] if *z == 0.0 && *t < 0.0 && *t >= -1.0 => Ok(*t),
        b => Err(Error::InvalidInput(format!(
            "frame data needs breakpoints {{τ, 0}} with τ in [−1, 0), got {b:?}"
        ))),
    }
}

/// sup |w_x| over the nodes of the band between the shocks.
fn band_slope(w: &PiecewiseRegularFn) -> f64 {
    let mid = &w.pieces()[1];
    mid.nodes().iter().fold(0.0f64, |a, &x| a.max(mid.deriv(x).abs()))
}

/// Physical time and shock data behind one frame time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionFrameMap {
    pub t_phys: f64,
    pub y1: f64,
    pub y2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl InteractionFrameMap {
    /// y₁ − y₂.
    pub fn frame_time(&self) -> f64 {
        self.y1 - self.y2
    }

    /// d(frame time)/d(physical time).
    pub fn rate(&self) -> f64 {
        self.a1 - self.a2
    }
}

/// Physical-frame data: shocks at y₁ < y₂.
#[derive(Debug, Clone)]
pub struct PhysicalTwoShock {
    pub t_phys: f64,
    pub w: PiecewiseRegularFn,
}

impl PhysicalTwoShock {
    pub fn new(t_phys: f64, w: PiecewiseRegularFn) -> Result<Self> {
        if w.breakpoints().len() != 2 {
            return Err(Error::InvalidInput("two-shock data needs exactly two breakpoints".into()));
        }
        Ok(Self { t_phys, w })
    }

    pub fn y1(&self) -> f64 {
        self.w.breakpoints()[0]
    }

    pub fn y2(&self) -> f64 {
        self.w.breakpoints()[1]
    }
}

/// A snapshot in the interaction frame.
#[derive(Debug, Clone)]
pub struct TwoShockState {
    pub tau: f64,
    pub w: PiecewiseRegularFn,
    pub strengths: ShockStrengths,
    pub interior_slope_bound: f64,
    pub frame_map: InteractionFrameMap,
}

impl TwoShockState {
    /// Reads strengths and speeds off `w`; σ̇ come from `rates`.
    pub fn new(tau: f64, w: PiecewiseRegularFn, rates: (f64, f64), t_phys: f64, y2: f64) -> Result<Self> {
        if w.breakpoints() != [tau, 0.0] || !(tau < 0.0) {
            return Err(Error::InvalidInput(format!("frame data needs breakpoints {{{tau}, 0}} with {tau} < 0")));
        }
        let [l1, r1, l2, r2] = traces_of(&w, tau)?;
        let (s1, s2) = (l1 - r1, l2 - r2);
        if !(s1 > 0.0 && s2 > 0.0) {
            return Err(Error::Entropy(format!("strengths {s1}, {s2} at frame time {tau} are not positive")));
        }
        let (a1, a2) = (0.5 * (l1 + r1), 0.5 * (l2 + r2));
        if !(a1 > a2) {
            return Err(Error::NotApproaching { a1, a2 });
        }
        Ok(Self {
            tau,
            interior_slope_bound: band_slope(&w),
            w,
            strengths: ShockStrengths::new(s1, s2).with_rates(rates.0, rates.1),
            frame_map: InteractionFrameMap {
                t_phys,
                y1: y2 + tau,
                y2,
                a1,
                a2,
            },
        })
    }

    pub fn corrector(&self) -> Result<TwoShockCorrector> {
        TwoShockCorrector::new(self.strengths, self.tau)
    }

    /// a₁ − a₂.
    pub fn gap(&self) -> f64 {
        self.frame_map.rate()
    }

    pub fn split(&self) -> Result<SplitProfile> {
        SplitProfile::new(&self.w)
    }
}

fn traces_of(w: &PiecewiseRegularFn, tau: f64) -> Result<[f64; 4]> {
    Ok([
        trace(w, tau, Side::Left)?,
        trace(w, tau, Side::Right)?,
        trace(w, 0.0, Side::Left)?,
        trace(w, 0.0, Side::Right)?,
    ])
}

fn shift(w: &PiecewiseRegularFn, dx: f64) -> Result<PiecewiseRegularFn> {
    let (lo, hi) = w.window();
    let samples = w
        .pieces()
        .iter()
        .map(|s| (s.nodes().iter().map(|x| x + dx).collect(), s.values().to_vec()))
        .collect();
    let bps = w.breakpoints().iter().map(|b| b + dx).collect();
    PiecewiseRegularFn::from_pieces((lo + dx, hi + dx), bps, samples)
}

/// x̃ = x − y₂, frame time y₁ − y₂.
pub fn to_frame(phys: &PhysicalTwoShock) -> Result<TwoShockState> {
    let w = shift(&phys.w, -phys.y2())?;
    let tau = w.breakpoints()[0];
    TwoShockState::new(tau, w, (0.0, 0.0), phys.t_phys, phys.y2())
}

pub fn from_frame(state: &TwoShockState) -> Result<PhysicalTwoShock> {
    PhysicalTwoShock::new(state.frame_map.t_phys, shift(&state.w, state.frame_map.y2)?)
}

/// w = v₁ + v₂ with v₂ = (w(0±) + x·w_x(0±))·η(x) on either side of 0.
#[derive(Debug, Clone)]
pub struct SplitProfile {
    pub v1: PiecewiseRegularFn,
    pub v2: PiecewiseRegularFn,
    left: (f64, f64),
    right: (f64, f64),
}

impl SplitProfile {
    pub fn new(w: &PiecewiseRegularFn) -> Result<Self> {
        let left = (trace(w, 0.0, Side::Left)?, trace_slope(w, 0.0, Side::Left)?);
        let right = (trace(w, 0.0, Side::Right)?, trace_slope(w, 0.0, Side::Right)?);
        let lin = move |side: Side, x: f64| {
            let (v, s) = if side == Side::Left { left } else { right };
            (v + x * s) * eta(x)
        };
        let v2 = PiecewiseRegularFn::from_fn((-2.5, 2.5), vec![0.0], 1025, |p, x| {
            lin(if p == 0 { Side::Left } else { Side::Right }, x)
        })?;
        let last = w.pieces().len() - 1;
        let v1 = w.map_values(|p, x, v| v - lin(if p == last { Side::Right } else { Side::Left }, x))?;
        Ok(Self { v1, v2, left, right })
    }

    /// v₂ from its formula, one-sided at 0.
    pub fn v2_at(&self, x: f64, side: Side) -> f64 {
        let (v, s) = if side == Side::Left { self.left } else { self.right };
        (v + x * s) * eta(x)
    }
}

/// The four parts of the source: F = (ε²A + ε(B + C + D))/(a₁ − a₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoShockParts {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub gap: f64,
}

impl TwoShockParts {
    pub fn total(&self, eps: f64) -> f64 {
        (eps * eps * self.a + eps * (self.b + self.c + self.d)) / self.gap
    }
}

fn check_off_shock(state: &TwoShockState, x: f64) -> Result<()> {
    if x == 0.0 || x == state.tau {
        return Err(Error::SingularEvaluation(x));
    }
    if !(state.gap() > 0.0) {
        return Err(Error::DegenerateFrame { gap: state.gap() });
    }
    Ok(())
}

/// (w + φ^(w) − a₂)/(a₁ − a₂) at x ∉ {τ, 0}.
pub fn speed_two(state: &TwoShockState, x: f64) -> Result<f64> {
    check_off_shock(state, x)?;
    let corr = state.corrector()?;
    Ok((state.w.eval(x) + corr.value(x) - state.frame_map.a2) / state.gap())
}

/// Source parts at x ∉ {τ, 0}, with every Hilbert transform from the spline route.
pub fn assemble_f_two(state: &TwoShockState, x: f64) -> Result<TwoShockParts> {
    check_off_shock(state, x)?;
    let corr = state.corrector()?;
    let split = state.split()?;
    let tau = state.tau;
    let region = Region::of(x, tau);
    let (a1, a2) = (state.frame_map.a1, state.frame_map.a2);
    let gap = state.gap();
    let w = state.w.eval(x);
    let phi = corr.value_in(x, region);
    let phi_x = corr.dx_in(x, region);
    let a = corr.hilbert(x)? - phi * phi_x;
    let hw = hilbert_piecewise(&state.w, x)?;
    let hv2 = hilbert_piecewise(&split.v2, x)?;
    let side = if x < 0.0 { Side::Left } else { Side::Right };
    let v2 = split.v2_at(x, side);
    let v1 = w - v2;
    let b = hv2 - (v2 - a2) * phi0_dx(x);
    let c = (hw - hv2) - (v1 - (a1 - split.v2_at(tau, Side::Left))) * phi0_dx(x - tau);
    let full = hw - (w - a2) * phi_x - gap * corr.dt_in(x, region);
    Ok(TwoShockParts {
        a,
        b,
        c,
        d: full - b - c,
        gap,
    })
}

/// Nodes of the frame: a left block at fixed offsets from x = τ, a band of
/// fixed node count on [τ, 0], and a right block on [0, L].
#[derive(Debug, Clone)]
pub struct FrameGrid {
    left: Vec<f64>,
    middle: Vec<f64>,
    right: Vec<f64>,
}

impl FrameGrid {
    pub fn new(spec: &FrameGridSpec) -> Result<Self> {
        if spec.middle_nodes < 4 {
            return Err(Error::InvalidInput("the band needs at least 4 nodes".into()));
        }
        let xi = graded_side(spec.h_min, spec.growth, spec.half_width, spec.nodes_per_side)?;
        Ok(Self {
            left: xi.iter().rev().map(|v| -v).collect(),
            middle: uniform_nodes(0.0, 1.0, spec.middle_nodes),
            right: xi,
        })
    }

    pub fn blocks(&self) -> (usize, usize, usize) {
        (self.left.len(), self.middle.len(), self.right.len())
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.middle.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn region(&self, i: usize) -> Region {
        let (nl, nm, _) = self.blocks();
        if i < nl {
            Region::Left
        } else if i < nl + nm {
            Region::Middle
        } else {
            Region::Right
        }
    }

    fn band_x(tau: f64, s: f64) -> f64 {
        if s >= 1.0 {
            0.0
        } else {
            tau * (1.0 - s)
        }
    }

    pub fn x(&self, i: usize, tau: f64) -> f64 {
        let (nl, nm, _) = self.blocks();
        match self.region(i) {
            Region::Left => tau + self.left[i],
            Region::Middle => Self::band_x(tau, self.middle[i - nl]),
            Region::Right => self.right[i - nl - nm],
        }
    }

    fn block_nodes(&self, tau: f64) -> Vec<Vec<f64>> {
        vec![
            self.left.iter().map(|o| tau + o).collect(),
            self.middle.iter().map(|&s| Self::band_x(tau, s)).collect(),
            self.right.clone(),
        ]
    }

    pub fn nodes(&self, tau: f64) -> Vec<f64> {
        self.block_nodes(tau).concat()
    }

    /// Offsets x − τ of the left block, ending at 0.
    pub fn left_offsets(&self) -> &[f64] {
        &self.left
    }

    pub fn right_nodes(&self) -> &[f64] {
        &self.right
    }

    pub fn window(&self, tau: f64) -> (f64, f64) {
        (tau + self.left[0], *self.right.last().unwrap())
    }

    /// Smallest space step of the outer blocks.
    pub fn finest_step(&self) -> f64 {
        self.right[1] - self.right[0]
    }

    /// Interpolation stencil in reference coordinates, so one stencil serves
    /// every level.
    pub fn stencil(&self, region: Region, tau: f64, x: f64) -> Stencil {
        let (nl, nm, _) = self.blocks();
        match region {
            Region::Left => locate(&self.left, 0, x - tau),
            Region::Middle => locate(&self.middle, nl, 1.0 - x / tau),
            Region::Right => locate(&self.right, nl + nm, x),
        }
    }

    /// [w(τ−), w(τ+), w(0−), w(0+)].
    pub fn traces(&self, v: &[f64]) -> [f64; 4] {
        let (nl, nm, _) = self.blocks();
        [v[nl - 1], v[nl], v[nl + nm - 1], v[nl + nm]]
    }

    pub fn split_values<'a>(&self, v: &'a [f64]) -> [&'a [f64]; 3] {
        let (nl, nm, _) = self.blocks();
        [&v[..nl], &v[nl..nl + nm], &v[nl + nm..]]
    }

    /// Whether the band spacing still resolves second derivatives: below the
    /// finest outer step, round-off in the nodal values swamps w_xx there.
    pub fn band_resolved(&self, tau: f64) -> bool {
        tau.abs() / (self.middle.len() - 1) as f64 >= self.finest_step()
    }

    /// Sobolev norm of a frame profile; an unresolved band contributes its H¹ part only.
    pub fn norm_of(&self, p: &PiecewiseRegularFn, order: usize) -> Result<f64> {
        let r = sobolev_norm(p, order, &[])?;
        let tau = p.breakpoints()[0];
        if order < 2 || self.band_resolved(tau) {
            return Ok(r.total);
        }
        let band = sobolev_norm(p, 1, &[])?.per_piece_norms[1];
        let pp = &r.per_piece_norms;
        Ok((pp[0] * pp[0] + band * band + pp[2] * pp[2]).sqrt())
    }

    pub fn norm(&self, v: &[f64], tau: f64, order: usize) -> Result<f64> {
        self.norm_of(&self.profile(v, tau)?, order)
    }

    pub fn profile(&self, v: &[f64], tau: f64) -> Result<PiecewiseRegularFn> {
        let samples = self
            .block_nodes(tau)
            .into_iter()
            .zip(self.split_values(v))
            .map(|(x, y)| (x, y.to_vec()))
            .collect();
        PiecewiseRegularFn::from_pieces(self.window(tau), vec![tau, 0.0], samples)
    }
}

fn region_code(r: Region) -> u8 {
    match r {
        Region::Left => 0,
        Region::Middle => 1,
        Region::Right => 2,
    }
}

fn region_of_code(c: u8) -> Region {
    match c {
        0 => Region::Left,
        1 => Region::Middle,
        _ => Region::Right,
    }
}

fn frame_region(t: f64, x: f64) -> Option<u8> {
    if x < t {
        Some(0)
    } else if x > t && x < 0.0 {
        Some(1)
    } else if x > 0.0 {
        Some(2)
    } else {
        None
    }
}

/// Frame speed of one state, frozen in time.
pub struct TwoShockField<'a> {
    state: &'a TwoShockState,
    corr: TwoShockCorrector,
    eps: f64,
}

impl<'a> TwoShockField<'a> {
    pub fn new(state: &'a TwoShockState, eps: f64) -> Result<Self> {
        if !(state.gap() > 0.0) {
            return Err(Error::DegenerateFrame { gap: state.gap() });
        }
        Ok(Self {
            corr: state.corrector()?,
            state,
            eps,
        })
    }
}

impl SpeedField for TwoShockField<'_> {
    fn speed(&self, _t: f64, x: f64, region: u8) -> f64 {
        let r = region_of_code(region);
        let piece = match r {
            Region::Left => 0,
            Region::Middle => 1,
            Region::Right => 2,
        };
        let (lo, hi) = self.state.w.window();
        let w = self.state.w.eval_piece(piece, x.clamp(lo, hi)).0;
        let ph = self.corr.value_in(x, r);
        (w + self.eps * ph - self.state.frame_map.a2) / self.state.gap()
    }

    fn region(&self, _t: f64, x: f64) -> Option<u8> {
        frame_region(self.state.tau, x)
    }

    fn barrier_distance(&self, _t: f64, x: f64) -> f64 {
        (x - self.state.tau).abs().min(x.abs())
    }
}

/// Frame speed of an iterate, linear in time between levels.
struct FrozenField2<'a> {
    grid: &'a FrameGrid,
    times: &'a [f64],
    w: &'a [Vec<f64>],
    traces: Vec<[f64; 4]>,
    eps: f64,
}

impl SpeedField for FrozenField2<'_> {
    fn speed(&self, t: f64, x: f64, region: u8) -> f64 {
        let r = region_of_code(region);
        let n = self.times.len();
        let m = self.times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let th = ((t - self.times[m]) / (self.times[m + 1] - self.times[m])).clamp(0.0, 1.0);
        let st = self.grid.stencil(r, t, x);
        let v = (1.0 - th) * st.apply(&self.w[m]) + th * st.apply(&self.w[m + 1]);
        let tr: Vec<f64> = (0..4)
            .map(|k| (1.0 - th) * self.traces[m][k] + th * self.traces[m + 1][k])
            .collect();
        let (s1, s2) = (tr[0] - tr[1], tr[2] - tr[3]);
        let (a1, a2) = (0.5 * (tr[0] + tr[1]), 0.5 * (tr[2] + tr[3]));
        let ph = match TwoShockCorrector::new(ShockStrengths::new(s1, s2), t) {
            Ok(c) if self.eps != 0.0 => c.value_in(x, r),
            _ => 0.0,
        };
        (v + self.eps * ph - a2) / (a1 - a2)
    }

    fn region(&self, t: f64, x: f64) -> Option<u8> {
        frame_region(t, x)
    }

    fn barrier_distance(&self, t: f64, x: f64) -> f64 {
        (x - t).abs().min(x.abs())
    }
}

/// Geometry and Hilbert data of one half level.
#[derive(Debug, Clone)]
struct HalfLevel {
    tau: f64,
    x: Vec<f64>,
    hilbert: LinearHilbert,
    basis: Vec<TwoShockBasisPoint>,
    fold_t: Vec<f64>,
    fold_0: Vec<f64>,
    dphi_t: Vec<f64>,
    dphi_0: Vec<f64>,
    log_t: Vec<f64>,
    log_0: Vec<f64>,
}

impl HalfLevel {
    fn new(grid: &FrameGrid, tau: f64, cached: bool) -> Result<Self> {
        let blocks = grid.block_nodes(tau);
        let x: Vec<f64> = blocks.concat();
        let mut hilbert = LinearHilbert::new(blocks, x.clone());
        if cached {
            hilbert = hilbert.with_cache();
        }
        let basis = x
            .par_iter()
            .map(|&v| TwoShockBasisPoint::compute(tau, v))
            .collect::<Result<Vec<_>>>()?;
        let safe_ln = |z: f64| if z == 0.0 { 0.0 } else { z.abs().ln() };
        Ok(Self {
            tau,
            fold_t: x.iter().map(|&v| folded_log(v - tau)).collect(),
            fold_0: x.iter().map(|&v| folded_log(v)).collect(),
            dphi_t: x.iter().map(|&v| phi0_dx(v - tau)).collect(),
            dphi_0: x.iter().map(|&v| phi0_dx(v)).collect(),
            log_t: x.iter().map(|&v| safe_ln(v - tau)).collect(),
            log_0: x.iter().map(|&v| safe_ln(v)).collect(),
            hilbert,
            basis,
            x,
        })
    }

    /// F at every node; the jump logs are folded into the slope corrections
    /// on |x| ≤ 3 so that nothing singular is evaluated at the shocks.
    fn source(&self, grid: &FrameGrid, w: &[f64], rates: (f64, f64), eps: f64) -> Result<Vec<f64>> {
        let tr = grid.traces(w);
        let (s1, s2) = (tr[0] - tr[1], tr[2] - tr[3]);
        let (a1, a2) = (0.5 * (tr[0] + tr[1]), 0.5 * (tr[2] + tr[3]));
        let gap = a1 - a2;
        if !(gap > 0.0) {
            return Err(Error::DegenerateFrame { gap });
        }
        let corr = TwoShockCorrector::new(ShockStrengths::new(s1, s2).with_rates(rates.0, rates.1), self.tau)?;
        let (w1, w2) = corr.weights();
        let parts = grid.split_values(w);
        let hreg = self.hilbert.apply(&parts.map(|p| p.to_vec()));
        Ok((0..w.len())
            .map(|i| {
                let region = grid.region(i);
                let x = self.x[i];
                let wi = w[i];
                let phi = corr.value_in(x, region);
                let phi_x = corr.dx_in(x, region);
                let a = corr.hilbert_with(&self.basis[i]) - phi * phi_x;
                let n = if x.abs() <= 3.0 {
                    let g_t = match region {
                        Region::Left => s1 * self.fold_t[i] - (wi - tr[0]) * self.dphi_t[i],
                        Region::Middle => s1 * self.fold_t[i] - (wi - tr[1]) * self.dphi_t[i],
                        Region::Right => -s1 / PI * self.log_t[i] - (wi - a1) * w2 * self.dphi_t[i],
                    };
                    let g_0 = match region {
                        Region::Left => -s2 / PI * self.log_0[i] - (wi - a2) * w1 * self.dphi_0[i],
                        Region::Middle => s2 * self.fold_0[i] - (wi - tr[2]) * self.dphi_0[i],
                        Region::Right => s2 * self.fold_0[i] - (wi - tr[3]) * self.dphi_0[i],
                    };
                    hreg[i] + g_t + g_0 - gap * corr.dt_remainder(x, region)
                } else {
                    hreg[i] - s1 / PI * self.log_t[i] - s2 / PI * self.log_0[i] - (wi - a2) * phi_x
                        - gap * corr.dt_in(x, region)
                };
                (eps * eps * a + eps * n) / gap
            })
            .collect())
    }
}

/// F at every node of a frame-grid profile, from the grid's product-integration Hilbert operator.
pub fn source_on_frame_grid(
    grid: &FrameGrid,
    w: &[f64],
    tau: f64,
    rates: (f64, f64),
    eps: f64,
) -> Result<Vec<f64>> {
    HalfLevel::new(grid, tau, false)?.source(grid, w, rates, eps)
}

/// Trajectory of a converged two-shock run on the frame grids.
#[derive(Debug, Clone)]
pub struct TwoShockSolution {
    pub grid: FrameGrid,
    pub times: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub strengths: Vec<ShockStrengths>,
    pub frame: Vec<InteractionFrameMap>,
    pub constants: TwoShockConstants,
    pub cone: ConeConstants,
    pub report: IterationReport,
    /// Largest band slope over the final iterate.
    pub max_band_slope: f64,
    w_bar: PiecewiseRegularFn,
    f_half: Vec<Vec<f64>>,
}

impl TwoShockSolution {
    pub fn levels(&self) -> usize {
        self.times.len()
    }

    pub fn initial(&self) -> &PiecewiseRegularFn {
        &self.w_bar
    }

    pub fn source_half_levels(&self) -> &[Vec<f64>] {
        &self.f_half
    }

    pub fn profile(&self, level: usize) -> Result<PiecewiseRegularFn> {
        self.grid.profile(&self.w[level], self.times[level])
    }

    pub fn state(&self, level: usize) -> Result<TwoShockState> {
        let s = self.strengths[level];
        let f = self.frame[level];
        TwoShockState::new(
            self.times[level],
            self.profile(level)?,
            (s.sigma1_dot, s.sigma2_dot),
            f.t_phys,
            f.y2,
        )
    }

    pub fn corrector(&self, level: usize) -> Result<TwoShockCorrector> {
        TwoShockCorrector::new(self.strengths[level], self.times[level])
    }

    /// u = w + εφ^(w) at the nodes of a level.
    pub fn u_nodes(&self, level: usize) -> Result<Vec<f64>> {
        let corr = self.corrector(level)?;
        let eps = self.constants.hilbert_scale;
        let tau = self.times[level];
        Ok((0..self.grid.len())
            .map(|i| self.w[level][i] + eps * corr.value_in(self.grid.x(i, tau), self.grid.region(i)))
            .collect())
    }

    /// |w(τ, τ+) − w(τ, 0−)|.
    pub fn pinching(&self, level: usize) -> f64 {
        let tr = self.grid.traces(&self.w[level]);
        (tr[1] - tr[2]).abs()
    }

    pub fn band_slope(&self, level: usize) -> Result<f64> {
        Ok(band_slope(&self.profile(level)?))
    }
}

/// A-priori monitors of one iterate.
struct Monitor2<'a> {
    grid: &'a FrameGrid,
    traces0: [f64; 4],
    constants: &'a TwoShockConstants,
}

impl Monitor2<'_> {
    /// sup_τ H² norm and band slope; errors when a bound fails.
    fn check(&self, w: &[Vec<f64>], times: &[f64]) -> Result<(f64, f64)> {
        let c = self.constants;
        let stats = w
            .par_iter()
            .zip(times)
            .map(|(v, &tau)| {
                let p = self.grid.profile(v, tau)?;
                Ok((self.grid.norm_of(&p, 2)?, band_slope(&p)))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        for (j, v) in w.iter().enumerate() {
            let tr = self.grid.traces(v);
            let (s1, s2) = (tr[0] - tr[1], tr[2] - tr[3]);
            if s1 < c.delta1 || s2 < c.delta2 {
                return Err(Error::Regime(format!(
                    "strengths {s1:.4}, {s2:.4} fell below the floors {}, {} at τ = {}",
                    c.delta1, c.delta2, times[j]
                )));
            }
            for (k, limit) in [(0, c.delta1), (1, c.delta1), (2, c.delta2), (3, c.delta2)] {
                let drift = (tr[k] - self.traces0[k]).abs();
                if drift > limit {
                    return Err(Error::Regime(format!(
                        "trace drift {drift:.3e} exceeds {limit} at τ = {}",
                        times[j]
                    )));
                }
            }
            if stats[j].0 > c.m0 {
                return Err(Error::Regime(format!(
                    "H² norm {:.4} exceeds M₀ = {} at τ = {}",
                    stats[j].0, c.m0, times[j]
                )));
            }
        }
        Ok(stats.into_iter().fold((0.0, 0.0), |a, s| (a.0.max(s.0), a.1.max(s.1))))
    }
}

fn sup_diff(grid: &FrameGrid, times: &[f64], a: &[Vec<f64>], b: &[Vec<f64>], order: usize) -> Result<f64> {
    let d = a
        .par_iter()
        .zip(b)
        .zip(times)
        .map(|((x, y), &tau)| {
            let diff: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            grid.norm(&diff, tau, order)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

fn foot_value(w_bar: &PiecewiseRegularFn, piece: usize, x: f64) -> f64 {
    let (lo, hi) = w_bar.window();
    let edges = [lo, w_bar.breakpoints()[0], 0.0, hi];
    w_bar.eval_piece(piece, x.clamp(edges[piece], edges[piece + 1])).0
}

struct Run2<'a> {
    grid: FrameGrid,
    times: Vec<f64>,
    dt: Vec<f64>,
    t_half: Vec<f64>,
    w_bar: &'a PiecewiseRegularFn,
    w_bar_nodes: Vec<f64>,
    constants: &'a TwoShockConstants,
    cone: ConeConstants,
    halves: Vec<HalfLevel>,
    c1: Option<f64>,
    clamped: usize,
}

impl Run2<'_> {
    fn traces(&self, w: &[Vec<f64>]) -> Vec<[f64; 4]> {
        w.iter().map(|v| self.grid.traces(v)).collect()
    }

    /// Raw and clamped (σ̇₁, σ̇₂) on half levels.
    fn rates(&mut self, w: &[Vec<f64>]) -> (Vec<(f64, f64)>, f64) {
        let tr = self.traces(w);
        let mut raw_max = 0.0f64;
        let mut out = Vec::with_capacity(self.dt.len());
        for m in 0..self.dt.len() {
            let s = |k: usize| (tr[k][0] - tr[k][1], tr[k][2] - tr[k][3]);
            let (p, q) = (s(m), s(m + 1));
            let raw = ((q.0 - p.0) / self.dt[m], (q.1 - p.1) / self.dt[m]);
            raw_max = raw_max.max(raw.0.abs()).max(raw.1.abs());
            let r = match self.c1 {
                Some(c1) => {
                    let cap = 4.0 * c1 * self.t_half[m].abs().ln().abs();
                    if raw.0.abs() > cap || raw.1.abs() > cap {
                        self.clamped += 1;
                    }
                    (raw.0.clamp(-cap, cap), raw.1.clamp(-cap, cap))
                }
                None => raw,
            };
            out.push(r);
        }
        (out, raw_max)
    }

    fn sources(&mut self, w: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
        let (rates, raw_max) = self.rates(w);
        let halves: Vec<Vec<f64>> = w
            .windows(2)
            .map(|p| p[0].iter().zip(&p[1]).map(|(a, b)| 0.5 * (a + b)).collect())
            .collect();
        let eps = self.constants.hilbert_scale;
        let grid = &self.grid;
        let f = self
            .halves
            .par_iter()
            .zip(&halves)
            .zip(&rates)
            .map(|((hl, h), &r)| hl.source(grid, h, r, eps))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        if self.c1.is_none() {
            let c = self.constants;
            let base = (1.0 + c.m0 + c.b) / c.delta0();
            let mut c1 = 0.0f64;
            for (hl, fm) in self.halves.iter().zip(&f) {
                let env = base + hl.tau.abs().ln().abs();
                for (x, v) in hl.x.iter().zip(fm) {
                    if x.abs() < B_MAX {
                        c1 = c1.max(v.abs() / env);
                    }
                }
            }
            self.c1 = Some(c1);
        }
        Ok((f, raw_max))
    }

    fn characteristics(&self, w: &[Vec<f64>]) -> Result<CharacteristicMap> {
        let eps = self.constants.hilbert_scale;
        let traces = self.traces(w);
        let field = FrozenField2 {
            grid: &self.grid,
            times: &self.times,
            w,
            traces: traces.clone(),
            eps,
        };
        let opts = self.trace_options(w, &traces);
        let n = self.grid.len();
        let mut feet = vec![self.w_bar_nodes.clone()];
        let mut stencils = vec![vec![Vec::new(); n]];
        for j in 1..self.times.len() {
            let tau = self.times[j];
            let stops = stops_for(&self.times, j);
            let traced = (0..n)
                .into_par_iter()
                .map(|i| {
                    let region = self.grid.region(i);
                    let code = region_code(region);
                    let x0 = self.grid.x(i, tau);
                    let watch = x0.abs() <= 0.5;
                    let mut st = vec![Stencil::default(); j];
                    let mut foot = 0.0;
                    let mut breach = None;
                    trace_back(&field, tau, x0, code, &stops, &opts, |k, x| {
                        let t = stops[k];
                        if watch && breach.is_none() {
                            let d = (x - t).abs().min(x.abs());
                            let r = self.cone.radius(tau, t);
                            if d < r * (1.0 - 1e-9) {
                                breach = Some(Error::ConeViolation { t, x, distance: d, radius: r });
                            }
                        }
                        if k % 2 == 0 {
                            st[j - 1 - k / 2] = self.grid.stencil(region, t, x);
                        } else if k == stops.len() - 1 {
                            foot = foot_value(self.w_bar, code as usize, x);
                        }
                    })?;
                    match breach {
                        Some(e) => Err(e),
                        None => Ok((foot, st)),
                    }
                })
                .collect::<Result<Vec<(f64, Vec<Stencil>)>>>()?;
            let (f, s): (Vec<f64>, Vec<Vec<Stencil>>) = traced.into_iter().unzip();
            feet.push(f);
            stencils.push(s);
        }
        Ok(CharacteristicMap { feet, stencils })
    }

    fn trace_options(&self, w: &[Vec<f64>], traces: &[[f64; 4]]) -> TraceOptions {
        let eps = self.constants.hilbert_scale;
        let mut vmax = 0.0f64;
        for (v, tr) in w.iter().zip(traces) {
            let (a1, a2) = (0.5 * (tr[0] + tr[1]), 0.5 * (tr[2] + tr[3]));
            let wmax = v.iter().fold(0.0f64, |a, x| a.max((x - a2).abs()));
            // φ stays below 3 in size on the frame window
            vmax = vmax.max((wmax + eps.abs() * 3.0) / (a1 - a2).max(1e-12));
        }
        let dt_min = self.dt.iter().copied().fold(f64::INFINITY, f64::min);
        TraceOptions {
            vmax: vmax + 1.0,
            h_min: dt_min / 64.0,
            max_steps: 1_000_000,
        }
    }

    fn inner(
        &mut self,
        map: &CharacteristicMap,
        start: Vec<Vec<f64>>,
        monitor: &Monitor2,
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, InnerHistory, f64)> {
        let mut hist = InnerHistory::default();
        let mut w = start;
        for _ in 0..self.constants.max_inner {
            let (f, raw) = self.sources(&w)?;
            let next = map.integrate(&f, &self.dt);
            let beta = sup_diff(&self.grid, &self.times, &next, &w, 2)?;
            let (norm, slope) = monitor.check(&next, &self.times)?;
            log::debug!("two-shock inner: β = {beta:.3e}, sup norm {norm:.4}");
            hist.norm_history.push(norm);
            hist.diff_history.push(beta);
            hist.trace_rate_history.push(raw);
            w = next;
            if beta < self.constants.tol_inner {
                let (f, _) = self.sources(&w)?;
                return Ok((w, f, hist, slope));
            }
        }
        Err(Error::NonConvergence {
            iterations: self.constants.max_inner,
            last_diff: *hist.diff_history.last().unwrap_or(&f64::NAN),
        })
    }
}

/// Solves from w̄ (breakpoints {τ₀, 0}) up to the collision.
pub fn solve_two(w_bar: &PiecewiseRegularFn, constants: &TwoShockConstants) -> Result<TwoShockSolution> {
    solve_two_from(w_bar, constants, 0.0, 0.0)
}

/// [`solve_two`] with physical time and right shock position given at τ₀.
pub fn solve_two_from(
    w_bar: &PiecewiseRegularFn,
    constants: &TwoShockConstants,
    t_phys0: f64,
    y2_0: f64,
) -> Result<TwoShockSolution> {
    let warnings = constants.check(w_bar)?;
    let tau0 = frame_start(w_bar)?;
    let g = &constants.grid;
    let grid = FrameGrid::new(g)?;
    let times = approach_time_grid(tau0, g.end_fraction, g.time_ratio, g.max_step * tau0.abs())?;
    let dt: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let t_half: Vec<f64> = times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let nl = grid.blocks().0;
    let w_bar_nodes: Vec<f64> = (0..grid.len())
        .map(|i| foot_value(w_bar, region_code(grid.region(i)) as usize, grid.x(i, tau0)))
        .collect();
    let traces0 = grid.traces(&w_bar_nodes);
    // the band shrinks toward 0: each band node starts from w̄ at the point it
    // will occupy when the band has collapsed by the same fraction
    let mut w = Vec::with_capacity(times.len());
    for &tau in &times {
        let mut v = w_bar_nodes.clone();
        for (k, &s) in grid.middle.iter().enumerate() {
            v[nl + k] = foot_value(w_bar, 1, tau * (1.0 - s));
        }
        w.push(v);
    }
    log::info!("two-shock run: {} levels, {} nodes", times.len(), grid.len());
    let halves = t_half
        .iter()
        .map(|&t| HalfLevel::new(&grid, t, true))
        .collect::<Result<Vec<_>>>()?;
    let mut run = Run2 {
        grid: grid.clone(),
        times: times.clone(),
        dt,
        t_half,
        w_bar,
        w_bar_nodes,
        constants,
        cone: constants.cone(),
        halves,
        c1: None,
        clamped: 0,
    };
    let monitor = Monitor2 {
        grid: &grid,
        traces0,
        constants,
    };
    let mut report = IterationReport {
        warnings,
        ..Default::default()
    };
    let mut f_half = Vec::new();
    let mut max_band_slope = 0.0;
    for n in 0..constants.max_outer {
        let map = run.characteristics(&w).map_err(|e| e.at_stage("characteristics"))?;
        let (next, f, hist, slope) = run
            .inner(&map, w.clone(), &monitor)
            .map_err(|e| e.at_stage("inner iteration"))?;
        let d = sup_diff(&grid, &times, &next, &w, 1)?;
        log::info!(
            "two-shock outer {n}: H¹ change {d:.3e} after {} inner iterations",
            hist.diff_history.len()
        );
        report.inner.push(hist);
        report.outer_diff_history.push(d);
        w = next;
        f_half = f;
        max_band_slope = slope;
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
    if max_band_slope > constants.b {
        let msg = format!("band slope reached {max_band_slope:.4}, above b = {}", constants.b);
        log::warn!("{msg}");
        report.warnings.push(msg);
    }
    let traces = run.traces(&w);
    let n = times.len();
    let sig: Vec<(f64, f64)> = traces.iter().map(|t| (t[0] - t[1], t[2] - t[3])).collect();
    let mut strengths: Vec<ShockStrengths> = Vec::with_capacity(n);
    for k in 0..n {
        let (p, q) = if k == 0 { (0, 1.min(n - 1)) } else { (k - 1, k) };
        let rate = if p == q {
            (0.0, 0.0)
        } else {
            let h = times[q] - times[p];
            ((sig[q].0 - sig[p].0) / h, (sig[q].1 - sig[p].1) / h)
        };
        strengths.push(ShockStrengths::new(sig[k].0, sig[k].1).with_rates(rate.0, rate.1));
    }
    let mut frame = Vec::with_capacity(n);
    let (mut t_phys, mut y2) = (t_phys0, y2_0);
    for k in 0..n {
        let tr = traces[k];
        let (a1, a2) = (0.5 * (tr[0] + tr[1]), 0.5 * (tr[2] + tr[3]));
        if !(a1 > a2) {
            return Err(Error::DegenerateFrame { gap: a1 - a2 });
        }
        if k > 0 {
            let prev: &InteractionFrameMap = &frame[k - 1];
            let h = times[k] - times[k - 1];
            let g0 = prev.a1 - prev.a2;
            let g1 = a1 - a2;
            t_phys += 0.5 * h * (1.0 / g0 + 1.0 / g1);
            y2 += 0.5 * h * (prev.a2 / g0 + a2 / g1);
        }
        frame.push(InteractionFrameMap {
            t_phys,
            y1: y2 + times[k],
            y2,
            a1,
            a2,
        });
    }
    Ok(TwoShockSolution {
        grid,
        times,
        w,
        strengths,
        frame,
        constants: constants.clone(),
        cone: run.cone,
        report,
        max_band_slope,
        w_bar: w_bar.clone(),
        f_half,
    })
}

/// Single-shock data produced at the collision.
#[derive(Debug, Clone)]
pub struct Handoff {
    pub w_bar: PiecewiseRegularFn,
    pub coeffs: CorrectorCoeffs,
    /// Strengths extrapolated to τ → 0⁻.
    pub sigma1: f64,
    pub sigma2: f64,
    pub merged_jump: f64,
    pub t_collision: f64,
    pub y_collision: f64,
}

/// Extrapolates the last two levels linearly in √|τ| to the collision and
/// merges the outer blocks into data with one shock at 0.
pub fn handoff(sol: &TwoShockSolution) -> Result<Handoff> {
    let n = sol.levels();
    if n < 2 {
        return Err(Error::InvalidInput("handoff needs at least two levels".into()));
    }
    let (ra, rb) = (sol.times[n - 2].abs().sqrt(), sol.times[n - 1].abs().sqrt());
    let k = rb / (ra - rb);
    let (wa, wb) = (&sol.w[n - 2], &sol.w[n - 1]);
    let lim: Vec<f64> = wb.iter().zip(wa).map(|(b, a)| b + k * (b - a)).collect();
    let tr = sol.grid.traces(&lim);
    let (sigma1, sigma2) = (tr[0] - tr[1], tr[2] - tr[3]);
    let merged_jump = tr[0] - tr[3];
    if !(merged_jump > 0.0) {
        return Err(Error::Entropy(format!("merged jump {merged_jump} is not positive")));
    }
    let coeffs = handoff_coeffs(sigma1, sigma2)?;
    let [left, _, right] = sol.grid.split_values(&lim);
    let offsets = sol.grid.left_offsets().to_vec();
    let xi = sol.grid.right_nodes().to_vec();
    let window = (offsets[0], *xi.last().unwrap());
    let w_bar = PiecewiseRegularFn::from_pieces(
        window,
        vec![0.0],
        vec![(offsets, left.to_vec()), (xi, right.to_vec())],
    )?;
    let last = &sol.frame[n - 1];
    let gap = last.rate();
    let remaining = sol.times[n - 1].abs() / gap;
    Ok(Handoff {
        w_bar,
        coeffs,
        sigma1,
        sigma2,
        merged_jump,
        t_collision: last.t_phys + remaining,
        y_collision: last.y2 + last.a2 * remaining,
    })
}

/// Shock positions on the stitched physical time axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t_phys: f64,
    /// Frame time before the collision, `None` after.
    pub t_frame: Option<f64>,
    pub y1: f64,
    pub y2: f64,
    pub sigma1: f64,
    /// Zero once the shocks have merged.
    pub sigma2: f64,
}

/// Controls of a full interaction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InteractionConstants {
    pub two: TwoShockConstants,
    pub single_grid: GridSpec,
    /// Horizon after the collision; the admissible default when `None`.
    pub single_horizon: Option<f64>,
}

impl Default for InteractionConstants {
    fn default() -> Self {
        Self {
            two: TwoShockConstants::default(),
            single_grid: GridSpec {
                nodes_per_side: 256,
                ..GridSpec::default()
            },
            single_horizon: None,
        }
    }
}

/// Both stages and the stitched path.
#[derive(Debug, Clone)]
pub struct InteractionRun {
    pub two: TwoShockSolution,
    pub handoff: Handoff,
    pub single: SingleShockSolution,
    pub path: Vec<PathPoint>,
}

impl InteractionRun {
    /// Distance between the last two-shock positions and the first merged one.
    pub fn junction_gap(&self) -> f64 {
        let last = self.two.frame.last().unwrap();
        let y = self.single.y_phys[0];
        (y - last.y1).abs().max((y - last.y2).abs())
    }
}

/// to_frame → solve_two → handoff → single-shock solve, stitched in physical time.
pub fn full_interaction_run(phys: &PhysicalTwoShock, constants: &InteractionConstants) -> Result<InteractionRun> {
    let state = to_frame(phys).map_err(|e| e.at_stage("frame change"))?;
    let two = solve_two_from(&state.w, &constants.two, phys.t_phys, phys.y2()).map_err(|e| e.at_stage("two-shock solve"))?;
    let h = handoff(&two).map_err(|e| e.at_stage("handoff"))?;
    let mut sc = SolverConstants::from_data(&h.w_bar, h.coeffs).map_err(|e| e.at_stage("handoff"))?;
    sc.grid = constants.single_grid;
    sc.hilbert_scale = constants.two.hilbert_scale;
    if let Some(t) = constants.single_horizon {
        sc = sc.with_horizon(t);
        sc.allow_long_horizon = true;
    }
    let single = solve_from(&h.w_bar, h.coeffs, &sc, h.y_collision).map_err(|e| e.at_stage("single-shock solve"))?;
    let mut path: Vec<PathPoint> = two
        .frame
        .iter()
        .zip(&two.strengths)
        .zip(&two.times)
        .map(|((f, s), &tau)| PathPoint {
            t_phys: f.t_phys,
            t_frame: Some(tau),
            y1: f.y1,
            y2: f.y2,
            sigma1: s.sigma1,
            sigma2: s.sigma2,
        })
        .collect();
    path.extend(single.times.iter().zip(&single.y_phys).zip(&single.sigma).map(|((t, &y), &s)| PathPoint {
        t_phys: h.t_collision + t,
        t_frame: None,
        y1: y,
        y2: y,
        sigma1: s,
        sigma2: 0.0,
    }));
    Ok(InteractionRun {
        two,
        handoff: h,
        single,
        path,
    })
}

/// Two tanh shoulders of height `amplitude` around an empty band [τ₀, 0]:
/// left shock amplitude|0 at τ₀, right shock 0|−amplitude at 0. `norm` fixes
/// the H² norm through the shoulder width.
pub fn two_shock_preset(amplitude: f64, norm: f64, tau0: f64) -> Result<PiecewiseRegularFn> {
    if !(-1.0..0.0).contains(&tau0) {
        return Err(Error::InvalidInput(format!("τ₀ = {tau0} outside [−1, 0)")));
    }
    let base = tanh_preset(2.0 * amplitude, norm, (-8.0, 8.0))?;
    PiecewiseRegularFn::from_fn((tau0 - 8.0, 8.0), vec![tau0, 0.0], 2049, |p, x| match p {
        0 => base.eval_piece(0, (x - tau0).min(0.0)).0,
        1 => 0.0,
        _ => base.eval_piece(1, x).0,
    })
}

/// Frame data of two Burgers constant states meeting a middle state, on a window.
pub fn piecewise_constant_frame(u_left: f64, u_mid: f64, u_right: f64, tau: f64, window: (f64, f64)) -> Result<PiecewiseRegularFn> {
    PiecewiseRegularFn::from_fn(window, vec![tau, 0.0], 16, |p, _| match p {
        0 => u_left,
        1 => u_mid,
        _ => u_right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_cone_constants() {
        let c = TwoShockConstants::symmetric_preset().cone();
        assert!((c.gamma0 - 1.0 / 6.0).abs() < 1e-15);
        assert!((c.gamma1 - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn band_nodes_follow_the_frame() {
        let g = FrameGrid::new(&FrameGridSpec::default()).unwrap();
        let (nl, nm, _) = g.blocks();
        let tau = -0.03;
        assert_eq!(g.x(nl - 1, tau), tau);
        assert_eq!(g.x(nl, tau), tau);
        assert_eq!(g.x(nl + nm - 1, tau), 0.0);
        let x = g.nodes(tau);
        assert!(x[..nl].windows(2).all(|w| w[1] > w[0]));
        assert!(x[nl..nl + nm].windows(2).all(|w| w[1] > w[0]));
    }
}
