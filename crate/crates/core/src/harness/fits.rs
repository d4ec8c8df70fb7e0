//! Envelope fits for bounded-ratio statements and the corrector-slope fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Envelopes e(x) > 0 against which |value| is compared near a singular point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Constant,
    LnSquared,
    LnOverX,
    LnOverXSquared,
    Linear,
}

impl Envelope {
    pub fn eval(self, x: f64) -> f64 {
        let a = x.abs();
        let l = a.ln().abs();
        match self {
            Envelope::Constant => 1.0,
            Envelope::LnSquared => l * l,
            Envelope::LnOverX => l / a,
            Envelope::LnOverXSquared => l / (a * a),
            Envelope::Linear => a,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Envelope::Constant => "constant",
            Envelope::LnSquared => "ln2",
            Envelope::LnOverX => "ln_over_x",
            Envelope::LnOverXSquared => "ln_over_x2",
            Envelope::Linear => "linear",
        }
    }
}

/// Fit of |value| ≤ C·envelope over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub name: String,
    pub points: Vec<f64>,
    /// Least-squares C in |value| ≈ C·envelope.
    pub fitted: f64,
    pub max_ratio: f64,
    /// Max ratio on the doubled sample set, when a refinement was run.
    pub refined_max_ratio: Option<f64>,
    pub bounded: bool,
}

impl EnvelopeFit {
    /// Fit from (x, value, envelope) triples, without a refinement verdict.
    pub fn from_samples(name: &str, samples: &[(f64, f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("envelope fit needs samples".into()));
        }
        if let Some(&(x, _, e)) = samples.iter().find(|s| !(s.2 > 0.0)) {
            return Err(Error::InvalidInput(format!("envelope {e} at x = {x} is not positive")));
        }
        let (num, den) = samples
            .iter()
            .fold((0.0, 0.0), |(n, d), &(_, v, e)| (n + v.abs() * e, d + e * e));
        let max_ratio = samples.iter().map(|&(_, v, e)| v.abs() / e).fold(0.0, f64::max);
        Ok(Self {
            name: name.to_string(),
            points: samples.iter().map(|s| s.0).collect(),
            fitted: num / den,
            max_ratio,
            refined_max_ratio: None,
            bounded: max_ratio.is_finite(),
        })
    }
}

/// n log-spaced points with |x| in [lo, hi] on each requested side.
pub fn log_points(lo: f64, hi: f64, n: usize, left: bool, right: bool) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mags: Vec<f64> = (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n.max(2) - 1) as f64).exp())
        .collect();
    let mut out = Vec::with_capacity(2 * n);
    if left {
        out.extend(mags.iter().rev().map(|m| -m));
    }
    if right {
        out.extend(mags.iter().copied());
    }
    out
}

/// Samples f on both sides of 0 at n log-spaced points with |x| in [lo, hi],
/// then at 2n points with the inner cutoff halved; bounded when the max ratio
/// is finite and grows by less than 20% under that refinement.
pub fn envelope_fit<F>(envelope: Envelope, f: F, lo: f64, hi: f64, n: usize) -> Result<EnvelopeFit>
where
    F: Fn(f64) -> Result<f64>,
{
    let sample = |lo: f64, m: usize| -> Result<Vec<(f64, f64, f64)>> {
        log_points(lo, hi, m, true, true)
            .into_iter()
            .map(|x| Ok((x, f(x)?, envelope.eval(x))))
            .collect()
    };
    let coarse = EnvelopeFit::from_samples(envelope.name(), &sample(lo, n)?)?;
    let fine = EnvelopeFit::from_samples(envelope.name(), &sample(0.5 * lo, 2 * n)?)?;
    let growth = fine.max_ratio / coarse.max_ratio;
    Ok(EnvelopeFit {
        bounded: coarse.bounded && fine.bounded && (coarse.max_ratio == 0.0 || growth < 1.2),
        refined_max_ratio: Some(fine.max_ratio),
        ..coarse
    })
}

/// Least-squares coefficient of |x|·ln|x| in u(x) − u(0±).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub coefficient: f64,
    pub points: usize,
    /// Relative residual of a fit by |x|·ln|x| alone.
    pub singular_residual: f64,
    /// Set when |x|·ln|x| alone explains the data poorly (relative residual above 0.1).
    pub poor_fit: bool,
}

/// Fits u(x) − u0 ≈ c·|x| ln|x| + p·x + q·x² on samples with |x| in [10⁻³, 10⁻¹]
/// from one side of the shock; `c` is the corrector slope.
pub fn fit_corrector_slope(samples: &[(f64, f64)], u0: f64) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(x, _)| (1e-3..=1e-1).contains(&x.abs()))
        .map(|&(x, u)| (x, u - u0))
        .collect();
    let sides = (pts.iter().any(|p| p.0 < 0.0), pts.iter().any(|p| p.0 > 0.0));
    if sides.0 && sides.1 {
        return Err(Error::InvalidInput("corrector-slope samples must come from one side".into()));
    }
    if pts.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "insufficient near-shock resolution: {} samples with |x| in [1e-3, 1e-1], need 8",
            pts.len()
        )));
    }
    let basis = |x: f64| [x.abs() * x.abs().ln(), x, x * x];
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(x, v) in &pts {
        let b = basis(x);
        for i in 0..3 {
            atb[i] += b[i] * v;
            for j in 0..3 {
                ata[i][j] += b[i] * b[j];
            }
        }
    }
    let coefficient = solve3(ata, atb)
        .ok_or_else(|| Error::Numerical("corrector-slope normal equations are singular".into()))?[0];
    let c_only = atb[0] / ata[0][0];
    let (res, norm) = pts.iter().fold((0.0, 0.0), |(r, n), &(x, v)| {
        let e = v - c_only * basis(x)[0];
        (r + e * e, n + v * v)
    });
    let singular_residual = if norm > 0.0 { (res / norm).sqrt() } else { 0.0 };
    Ok(SlopeFit {
        coefficient,
        points: pts.len(),
        singular_residual,
        poor_fit: singular_residual > 0.1,
    })
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cramer's rule.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(&a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *o = det3(&m) / d;
    }
    Some(out)
}
