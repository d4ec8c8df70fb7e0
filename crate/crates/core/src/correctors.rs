//! Singular corrector profiles carried by shocks: the cutoff η, the offset family
//! φ(x, b), the one-sided piece g_b, and the one- and two-shock correctors.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::function_core::{eta_derivs, hilbert_continuous, hilbert_gb};

/// Largest admissible offset b.
pub const B_MAX: f64 = 1.0 / (2.0 * std::f64::consts::E);

const TWO_OVER_PI: f64 = 2.0 / PI;

/// Even C² cutoff equal to 1 on |x| ≤ inner and 0 on |x| ≥ outer.
///
/// The bridge is the quintic smoothstep s(u) = 6u⁵ − 15u⁴ + 10u³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self {
            inner_radius: 1.0,
            outer_radius: 2.0,
        }
    }
}

impl CutoffSpec {
    /// Cutoff value and first two derivatives.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let w = self.outer_radius - self.inner_radius;
        let a = x.abs();
        if a <= self.inner_radius {
            return (1.0, 0.0, 0.0);
        }
        if a >= self.outer_radius {
            return (0.0, 0.0, 0.0);
        }
        // rescale to the unit bridge 1 ≤ |y| ≤ 2
        let y = (1.0 + (a - self.inner_radius) / w) * x.signum();
        let d = eta_derivs(y);
        (d[0], d[1] / w, d[2] / (w * w))
    }
}

/// η with the default radii 1 and 2.
pub fn eta(x: f64) -> f64 {
    eta_derivs(x)[0]
}

pub fn eta_dx(x: f64) -> f64 {
    eta_derivs(x)[1]
}

/// Wide cutoff η(x/3), equal to 1 on |x| ≤ 3.
fn eta3(x: f64) -> (f64, f64) {
    let d = eta_derivs(x / 3.0);
    (d[0], d[1] / 3.0)
}

#[inline]
fn xlogx(z: f64) -> f64 {
    if z > 0.0 {
        z * z.ln()
    } else {
        0.0
    }
}

/// φ(x, b) = (2η(x)/π)·[(|x|+b)ln(|x|+b) − b ln b], with b ln b = 0 at b = 0.
pub fn phi(x: f64, b: f64) -> f64 {
    let e = eta(x);
    if e == 0.0 {
        return 0.0;
    }
    TWO_OVER_PI * e * (xlogx(x.abs() + b) - xlogx(b))
}

/// ∂φ/∂x; at x = 0 the one-sided slopes differ in sign and 0 is returned.
pub fn phi_dx(x: f64, b: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let d = eta_derivs(x);
    if d[0] == 0.0 && d[1] == 0.0 {
        return 0.0;
    }
    let z = x.abs() + b;
    let core = xlogx(z) - xlogx(b);
    TWO_OVER_PI * (d[1] * core + d[0] * x.signum() * (z.ln() + 1.0))
}

/// ∂²φ/∂x² away from x = 0.
pub fn phi_dxx(x: f64, b: f64) -> f64 {
    if x == 0.0 {
        return f64::INFINITY;
    }
    let d = eta_derivs(x);
    let z = x.abs() + b;
    let core = xlogx(z) - xlogx(b);
    TWO_OVER_PI * (d[2] * core + 2.0 * d[1] * x.signum() * (z.ln() + 1.0) + d[0] / z)
}

/// ∂φ/∂b = (2η/π)[ln(|x|+b) − ln b], defined for b > 0.
pub fn phi_db(x: f64, b: f64) -> Result<f64> {
    if b <= 0.0 {
        return Err(Error::SingularParameter(format!("∂φ/∂b at b = {b}")));
    }
    Ok(TWO_OVER_PI * eta(x) * ((x.abs() + b).ln() - b.ln()))
}

/// φ₀(x) = φ(x, 0) = (2η/π)|x|ln|x|.
pub fn phi0(x: f64) -> f64 {
    phi(x, 0.0)
}

pub fn phi0_dx(x: f64) -> f64 {
    phi_dx(x, 0.0)
}

/// g_b = χ_{[0,∞)}·φ(·, b).
pub fn g_b(b: f64, x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        phi(x, b)
    }
}

/// Whether b lies outside the small-offset regime where g_b is negative and decreasing near 0.
pub fn offset_flagged(b: f64) -> bool {
    !(0.0..=B_MAX).contains(&b)
}

/// ∂g_b/∂b, zero for x < 0.
pub fn dgb_db(b: f64, x: f64) -> Result<f64> {
    if b <= 0.0 {
        return Err(Error::SingularParameter(format!("∂g_b/∂b at b = {b}")));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    phi_db(x, b)
}

/// H[φ₀](x) = H[g₀](x) − H[g₀](−x).
pub fn hilbert_phi0(x: f64) -> Result<f64> {
    Ok(hilbert_gb(0.0, x, 0)? - hilbert_gb(0.0, -x, 0)?)
}

/// Coefficients of the initial corrector on either side of a shock.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorrectorCoeffs {
    pub c1: f64,
    pub c2: f64,
}

impl Default for CorrectorCoeffs {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0 }
    }
}

/// Shock strengths and their time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockStrengths {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma1_dot: f64,
    pub sigma2_dot: f64,
}

impl ShockStrengths {
    pub fn new(sigma1: f64, sigma2: f64) -> Self {
        Self {
            sigma1,
            sigma2,
            sigma1_dot: 0.0,
            sigma2_dot: 0.0,
        }
    }

    pub fn with_rates(mut self, sigma1_dot: f64, sigma2_dot: f64) -> Self {
        self.sigma1_dot = sigma1_dot;
        self.sigma2_dot = sigma2_dot;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return Err(Error::Entropy(format!(
                "shock strengths must be positive, got σ₁ = {}, σ₂ = {}",
                self.sigma1, self.sigma2
            )));
        }
        Ok(())
    }

    /// Weights σ₂/(2σ₁+σ₂) and σ₁/(σ₁+2σ₂) of the two-shock corrector.
    pub fn weights(&self) -> (f64, f64) {
        let (s1, s2) = (self.sigma1, self.sigma2);
        (s2 / (2.0 * s1 + s2), s1 / (s1 + 2.0 * s2))
    }

    /// Time derivatives of [`weights`](Self::weights).
    pub fn weight_rates(&self) -> (f64, f64) {
        let (s1, s2, d1, d2) = (self.sigma1, self.sigma2, self.sigma1_dot, self.sigma2_dot);
        let den1 = 2.0 * s1 + s2;
        let den2 = s1 + 2.0 * s2;
        (
            2.0 * (d2 * s1 - s2 * d1) / (den1 * den1),
            2.0 * (d1 * s2 - s1 * d2) / (den2 * den2),
        )
    }
}

/// The single-shock corrector at a fixed time:
/// φ(x,0) + ((c₁−1)χ_{x<0} + (c₂−1)χ_{x>0})·φ(x, σt/2).
#[derive(Debug, Clone, Copy)]
pub struct SingleCorrector {
    pub coeffs: CorrectorCoeffs,
    pub sigma: f64,
    pub sigma_dot: f64,
    pub t: f64,
    offset: f64,
}

impl SingleCorrector {
    pub fn new(coeffs: CorrectorCoeffs, sigma: f64, sigma_dot: f64, t: f64) -> Result<Self> {
        if t < 0.0 {
            return Err(Error::InvalidInput(format!("time {t} < 0")));
        }
        let offset = 0.5 * sigma * t;
        if !(offset < B_MAX) {
            return Err(Error::Horizon {
                offset,
                cap: B_MAX,
            });
        }
        Ok(Self {
            coeffs,
            sigma,
            sigma_dot,
            t,
            offset: offset.max(0.0),
        })
    }

    /// The offset b = σt/2.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// c − 1 on the side of x; `left` decides at x = 0.
    fn excess(&self, x: f64, left: bool) -> f64 {
        if x < 0.0 || (x == 0.0 && left) {
            self.coeffs.c1 - 1.0
        } else {
            self.coeffs.c2 - 1.0
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        phi(x, 0.0) + self.excess(x, true) * phi(x, self.offset)
    }

    /// x-partial of the offset part alone, (c−1)·φₓ(x, b), one-sided at x = 0.
    pub fn offset_dx_side(&self, x: f64, left: bool) -> f64 {
        let c = self.excess(x, left);
        if c == 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            let s = if left { -1.0 } else { 1.0 };
            return c * TWO_OVER_PI * s * (self.offset.ln() + 1.0);
        }
        c * phi_dx(x, self.offset)
    }

    /// x-partial away from x = 0.
    pub fn dx(&self, x: f64) -> f64 {
        phi_dx(x, 0.0) + self.offset_dx_side(x, x < 0.0)
    }

    /// t-partial: (c−1)·∂φ/∂b(x, b)·(σ̇t + σ)/2.
    pub fn dt(&self, x: f64) -> Result<f64> {
        let c = self.excess(x, x < 0.0);
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(c * phi_db(x, self.offset)? * 0.5 * (self.sigma_dot * self.t + self.sigma))
    }

    /// H of the corrector at x.
    pub fn hilbert(&self, x: f64) -> Result<f64> {
        let mut h = hilbert_phi0(x)?;
        let (c1, c2) = (self.coeffs.c1 - 1.0, self.coeffs.c2 - 1.0);
        if c1 != 0.0 {
            h -= c1 * hilbert_gb(self.offset, -x, 0)?;
        }
        if c2 != 0.0 {
            h += c2 * hilbert_gb(self.offset, x, 0)?;
        }
        Ok(h)
    }
}

/// Free-function form of [`SingleCorrector::value`].
pub fn corrector_single(coeffs: CorrectorCoeffs, sigma: f64, sigma_dot: f64, t: f64, x: f64) -> Result<f64> {
    Ok(SingleCorrector::new(coeffs, sigma, sigma_dot, t)?.value(x))
}

/// Region of x relative to shocks at t < 0 and 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Left,
    Middle,
    Right,
}

impl Region {
    pub fn of(x: f64, t: f64) -> Self {
        if x < t {
            Region::Left
        } else if x < 0.0 {
            Region::Middle
        } else {
            Region::Right
        }
    }
}

/// The two-shock corrector for shocks at x = t < 0 and x = 0:
///
/// φ₀(x−t) + W₁(φ₀(x) − φ₀(t))      for x < t,
/// φ₀(x−t) + φ₀(x) − φ₀(t)          for t < x < 0,
/// W₂(φ₀(x−t) − φ₀(t)) + φ₀(x)      for x > 0,
///
/// with W₁ = σ₂/(2σ₁+σ₂), W₂ = σ₁/(σ₁+2σ₂), multiplied by η(x/3) so that it
/// has compact support. The factor is 1 wherever the bracket is not constant.
#[derive(Debug, Clone, Copy)]
pub struct TwoShockCorrector {
    pub strengths: ShockStrengths,
    pub t: f64,
    w1: f64,
    w2: f64,
    w1_dot: f64,
    w2_dot: f64,
    phi0_t: f64,
    phi0_dt: f64,
}

impl TwoShockCorrector {
    pub fn new(strengths: ShockStrengths, t: f64) -> Result<Self> {
        strengths.check()?;
        if !(t < 0.0) || t < -1.0 {
            return Err(Error::InvalidInput(format!("two-shock frame time must lie in [−1, 0), got {t}")));
        }
        let (w1, w2) = strengths.weights();
        let (w1_dot, w2_dot) = strengths.weight_rates();
        Ok(Self {
            strengths,
            t,
            w1,
            w2,
            w1_dot,
            w2_dot,
            phi0_t: phi0(t),
            phi0_dt: phi0_dx(t),
        })
    }

    pub fn weights(&self) -> (f64, f64) {
        (self.w1, self.w2)
    }

    fn bracket(&self, x: f64, region: Region) -> f64 {
        let t = self.t;
        match region {
            Region::Left => phi0(x - t) + self.w1 * (phi0(x) - self.phi0_t),
            Region::Middle => phi0(x - t) + phi0(x) - self.phi0_t,
            Region::Right => self.w2 * (phi0(x - t) - self.phi0_t) + phi0(x),
        }
    }

    /// Coefficients α, β in ∂ₓ(bracket) = α φ₀'(x−t) + β φ₀'(x).
    pub fn slope_weights(&self, region: Region) -> (f64, f64) {
        match region {
            Region::Left => (1.0, self.w1),
            Region::Middle => (1.0, 1.0),
            Region::Right => (self.w2, 1.0),
        }
    }

    pub fn value_in(&self, x: f64, region: Region) -> f64 {
        let (e, _) = eta3(x);
        e * self.bracket(x, region)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.value_in(x, Region::of(x, self.t))
    }

    pub fn dx_in(&self, x: f64, region: Region) -> f64 {
        let (e, de) = eta3(x);
        let (a, b) = self.slope_weights(region);
        let core = a * phi0_dx(x - self.t) + b * phi0_dx(x);
        e * core + if de != 0.0 { de * self.bracket(x, region) } else { 0.0 }
    }

    pub fn dx(&self, x: f64) -> f64 {
        self.dx_in(x, Region::of(x, self.t))
    }

    /// Part of ∂ₜ(bracket) left after removing −α φ₀'(x−t).
    pub fn dt_remainder(&self, x: f64, region: Region) -> f64 {
        let t = self.t;
        match region {
            Region::Left => self.w1_dot * (phi0(x) - self.phi0_t) - self.w1 * self.phi0_dt,
            Region::Middle => -self.phi0_dt,
            Region::Right => self.w2_dot * (phi0(x - t) - self.phi0_t) - self.w2 * self.phi0_dt,
        }
    }

    pub fn dt_in(&self, x: f64, region: Region) -> f64 {
        let (e, _) = eta3(x);
        let (a, _) = self.slope_weights(region);
        e * (-a * phi0_dx(x - self.t) + self.dt_remainder(x, region))
    }

    pub fn dt(&self, x: f64) -> f64 {
        self.dt_in(x, Region::of(x, self.t))
    }

    /// H of the corrector at x using precomputed t-dependent transforms.
    pub fn hilbert_with(&self, basis: &TwoShockBasisPoint) -> f64 {
        basis.h_phi0_shift + basis.h_phi0 - self.phi0_t * basis.h_eta3
            - (1.0 - self.w1) * basis.h_left
            - (1.0 - self.w2) * basis.h_right
    }

    pub fn hilbert(&self, x: f64) -> Result<f64> {
        Ok(self.hilbert_with(&TwoShockBasisPoint::compute(self.t, x)?))
    }
}

/// Free-function form of [`TwoShockCorrector::value`].
pub fn corrector_two(strengths: ShockStrengths, t: f64, x: f64) -> Result<f64> {
    Ok(TwoShockCorrector::new(strengths, t)?.value(x))
}

/// Hilbert transforms at one point of the pieces that make up the two-shock
/// corrector; they depend on t and x but not on the strengths.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoShockBasisPoint {
    /// H[φ₀](x − t)
    pub h_phi0_shift: f64,
    /// H[φ₀](x)
    pub h_phi0: f64,
    /// H[η(·/3)](x)
    pub h_eta3: f64,
    /// H of η(·/3)·χ_{y<t}·(φ₀(y) − φ₀(t)) at x
    pub h_left: f64,
    /// H of η(·/3)·χ_{y>0}·(φ₀(y−t) − φ₀(t)) at x
    pub h_right: f64,
}

impl TwoShockBasisPoint {
    pub fn compute(t: f64, x: f64) -> Result<Self> {
        Ok(Self {
            h_phi0_shift: hilbert_phi0(x - t)?,
            h_phi0: hilbert_phi0(x)?,
            h_eta3: hilbert_eta3(x),
            h_left: hilbert_left_piece(t, x),
            h_right: hilbert_right_piece(t, x),
        })
    }
}

/// H[η(·/3)](x).
pub fn hilbert_eta3(x: f64) -> f64 {
    hilbert_continuous(|y| eta3(y).1, &[-6.0, -3.0, 3.0, 6.0], &[], x)
}

fn hilbert_left_piece(t: f64, x: f64) -> f64 {
    let p0t = phi0(t);
    let deriv = |y: f64| {
        let (e, de) = eta3(y);
        de * (phi0(y) - p0t) + e * phi0_dx(y)
    };
    let mut breaks: Vec<f64> = [-6.0, -3.0, -2.0, -1.0].iter().copied().filter(|&b| b < t).collect();
    breaks.push(t);
    hilbert_continuous(deriv, &breaks, &[t], x)
}

fn hilbert_right_piece(t: f64, x: f64) -> f64 {
    let p0t = phi0(t);
    let deriv = |y: f64| {
        let (e, de) = eta3(y);
        de * (phi0(y - t) - p0t) + e * phi0_dx(y - t)
    };
    let mut breaks = vec![0.0];
    breaks.extend([t + 1.0, t + 2.0, 3.0, 6.0].iter().copied().filter(|&b| b > 0.0));
    hilbert_continuous(deriv, &breaks, &[0.0], x)
}

/// Coefficients c₁ = 2(σ₁+σ₂)/(2σ₁+σ₂), c₂ = 2(σ₁+σ₂)/(σ₁+2σ₂) that the
/// two-shock corrector reduces to at the collision time.
pub fn handoff_coeffs(sigma1: f64, sigma2: f64) -> Result<CorrectorCoeffs> {
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::Entropy(format!(
            "handoff needs positive strengths, got {sigma1}, {sigma2}"
        )));
    }
    let s = 2.0 * (sigma1 + sigma2);
    Ok(CorrectorCoeffs {
        c1: s / (2.0 * sigma1 + sigma2),
        c2: s / (sigma1 + 2.0 * sigma2),
    })
}
