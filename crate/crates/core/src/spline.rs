//! Not-a-knot cubic splines.

use crate::error::{Error, Result};

/// Cubic spline through (x_i, y_i) stored via its knot second derivatives.
///
/// Two nodes give the linear interpolant and three nodes the interpolating parabola.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidInput(format!(
                "spline needs ≥ 2 matching nodes, got {} and {}",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| w[1] <= w[0] || !w[0].is_finite() || !w[1].is_finite()) {
            return Err(Error::InvalidInput("spline nodes must be strictly increasing".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spline values must be finite".into()));
        }
        let m = second_derivatives(&x, &y);
        Ok(Self { x, y, m })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn second_derivs(&self) -> &[f64] {
        &self.m
    }

    pub fn start(&self) -> f64 {
        self.x[0]
    }

    pub fn end(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Interval index j with x_j ≤ t ≤ x_{j+1}, clamped to the end intervals.
    #[inline]
    pub fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        let k = self.x.partition_point(|&v| v <= t);
        k.saturating_sub(1).min(n - 2)
    }

    /// Value, first and second derivative of the cubic on interval j, extended polynomially.
    #[inline]
    pub fn eval_on(&self, j: usize, t: f64) -> (f64, f64, f64) {
        let h = self.x[j + 1] - self.x[j];
        let a = (self.x[j + 1] - t) / h;
        let b = (t - self.x[j]) / h;
        let (mj, mk) = (self.m[j], self.m[j + 1]);
        let v = a * self.y[j]
            + b * self.y[j + 1]
            + ((a * a * a - a) * mj + (b * b * b - b) * mk) * h * h / 6.0;
        let d = (self.y[j + 1] - self.y[j]) / h - (3.0 * a * a - 1.0) * h * mj / 6.0
            + (3.0 * b * b - 1.0) * h * mk / 6.0;
        let dd = a * mj + b * mk;
        (v, d, dd)
    }

    #[inline]
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        self.eval_on(self.interval(t), t)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }

    #[inline]
    pub fn deriv(&self, t: f64) -> f64 {
        self.eval_all(t).1
    }

    /// Constant third derivative on interval j.
    #[inline]
    pub fn third_on(&self, j: usize) -> f64 {
        (self.m[j + 1] - self.m[j]) / (self.x[j + 1] - self.x[j])
    }
}

fn second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        return vec![0.0; 2];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 3 {
        // single parabola: constant second derivative
        let c = 2.0 * (d[1] - d[0]) / (h[0] + h[1]);
        return vec![c; 3];
    }
    // unknowns M_1..M_{n-2}; M_0 and M_{n-1} eliminated by the not-a-knot conditions
    let k = n - 2;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for r in 0..k {
        let i = r + 1;
        sub[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        sup[r] = h[i];
        rhs[r] = 6.0 * (d[i] - d[i - 1]);
    }
    // M_0 = (1 + h0/h1) M_1 − (h0/h1) M_2
    let (h0, h1) = (h[0], h[1]);
    diag[0] += h0 * (1.0 + h0 / h1);
    sup[0] -= h0 * h0 / h1;
    // M_{n-1} = (1 + hb/ha) M_{n-2} − (hb/ha) M_{n-3}
    let (ha, hb) = (h[n - 3], h[n - 2]);
    diag[k - 1] += hb * (1.0 + hb / ha);
    sub[k - 1] -= hb * hb / ha;
    let inner = if k == 1 {
        // n = 3 handled above; k == 1 cannot occur with n ≥ 4
        vec![rhs[0] / diag[0]]
    } else {
        thomas(&sub, &diag, &sup, &rhs)
    };
    let mut m = vec![0.0; n];
    m[1..n - 1].copy_from_slice(&inner);
    m[0] = (1.0 + h0 / h1) * m[1] - (h0 / h1) * m[2];
    m[n - 1] = (1.0 + hb / ha) * m[n - 2] - (hb / ha) * m[n - 3];
    m
}

/// Tridiagonal solve; sub[0] and sup[k-1] are ignored.
pub(crate) fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let k = diag.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..k {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < k { sup[i] / den } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut out = vec![0.0; k];
    out[k - 1] = d[k - 1];
    for i in (0..k - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_on_uneven_nodes() {
        let x = vec![0.0, 0.1, 0.35, 0.5, 0.9, 1.0, 1.7];
        let f = |t: f64| 2.0 - t + 0.5 * t * t - 1.3 * t * t * t;
        let y = x.iter().map(|&t| f(t)).collect();
        let s = CubicSpline::new(x, y).unwrap();
        for &t in &[0.05, 0.2, 0.77, 1.3, 1.69] {
            assert!((s.eval(t) - f(t)).abs() < 1e-12);
            let df = -1.0 + t - 3.9 * t * t;
            assert!((s.deriv(t) - df).abs() < 1e-10);
        }
    }

    #[test]
    fn four_nodes_is_the_interpolating_cubic() {
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![1.0, 2.0, 9.0, 28.0];
        let s = CubicSpline::new(x, y).unwrap();
        assert!((s.eval(1.5) - (1.0 + 1.5f64.powi(3))).abs() < 1e-12);
    }

    #[test]
    fn short_pieces_fall_back() {
        let s = CubicSpline::new(vec![0.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert!((s.eval(0.5) - 1.5).abs() < 1e-15);
        let p = CubicSpline::new(vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 9.0]).unwrap();
        assert!((p.eval(2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(CubicSpline::new(vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
    }
}
