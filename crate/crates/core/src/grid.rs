//! Space and time grids graded toward shocks and toward singular times.

use crate::error::{Error, Result};

/// Distances 0 = ξ₀ < ξ₁ < … < ξ_{n−1} = length: steps grow geometrically from
/// `h_min` by `ratio` until they reach the uniform spacing that fills the rest.
pub fn graded_side(h_min: f64, ratio: f64, length: f64, n: usize) -> Result<Vec<f64>> {
    if n < 4 || !(h_min > 0.0) || !(ratio >= 1.0) || !(length > h_min) {
        return Err(Error::InvalidInput(format!(
            "graded grid needs n ≥ 4, h_min > 0, ratio ≥ 1 (got n = {n}, h_min = {h_min}, ratio = {ratio})"
        )));
    }
    let steps = n - 1;
    let mut m = 0usize;
    let mut covered = 0.0;
    let mut h = h_min;
    // smallest m with the next geometric step at least the uniform remainder step
    while m < steps {
        let uniform = (length - covered) / (steps - m) as f64;
        if h >= uniform {
            break;
        }
        covered += h;
        h *= ratio;
        m += 1;
    }
    if covered >= length {
        return Err(Error::InvalidInput("grading too slow for the requested length".into()));
    }
    let mut xi = Vec::with_capacity(n);
    xi.push(0.0);
    let mut s = 0.0;
    let mut step = h_min;
    for _ in 0..m {
        s += step;
        xi.push(s);
        step *= ratio;
    }
    let rest = steps - m;
    let uniform = (length - s) / rest as f64;
    for k in 1..=rest {
        xi.push(s + uniform * k as f64);
    }
    xi[n - 1] = length;
    Ok(xi)
}

/// Levels 0 = t₀ < … < t_N = t_end with steps growing by 1/ratio from
/// `finest`·t_end and capped at `max_step`·t_end.
pub fn geometric_time_grid(t_end: f64, finest: f64, ratio: f64, max_step: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || !(finest > 0.0 && finest < 1.0) || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput("bad time grid parameters".into()));
    }
    let mut t = vec![0.0];
    let mut h = finest * t_end;
    let cap = max_step * t_end;
    let mut now = 0.0;
    while now < t_end {
        let step = h.min(cap);
        now += step;
        if t_end - now < 0.25 * step {
            now = t_end;
        }
        t.push(now.min(t_end));
        h /= ratio;
    }
    let n = t.len();
    t[n - 1] = t_end;
    Ok(t)
}

/// Frame times from τ₀ < 0 toward 0: |τ| shrinks by `ratio` per level (capped
/// at `max_step` in absolute size) until it reaches `end_fraction`·|τ₀|.
pub fn approach_time_grid(tau0: f64, end_fraction: f64, ratio: f64, max_step: f64) -> Result<Vec<f64>> {
    if !(tau0 < 0.0) || !(end_fraction > 0.0 && end_fraction < 1.0) || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput("bad approach grid parameters".into()));
    }
    let end = tau0 * end_fraction;
    let mut t = vec![tau0];
    let mut now = tau0;
    while now < end {
        let next = (now * ratio).min(now + max_step);
        now = if next >= end || (end - next).abs() < 0.25 * (next - now) { end } else { next };
        t.push(now);
    }
    Ok(t)
}

/// n points on [0, 1] clustered toward both ends (Chebyshev–Lobatto).
pub fn clustered_unit(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()))
        .map(|v| v.clamp(0.0, 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_side_shape() {
        let xi = graded_side(1e-5, 1.08, 8.0, 512).unwrap();
        assert_eq!(xi.len(), 512);
        assert_eq!(xi[0], 0.0);
        assert_eq!(xi[511], 8.0);
        assert!((xi[1] - 1e-5).abs() < 1e-18);
        let steps: Vec<f64> = xi.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)));
        assert!(steps.iter().all(|&s| s <= steps[510] * 1.08 + 1e-15));
    }

    #[test]
    fn time_grid_shape() {
        let t = geometric_time_grid(1.0, 1e-4, 0.8, 0.05).unwrap();
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 1.0);
        assert!((t[1] - 1e-4).abs() < 1e-16);
        assert!(t.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.05 * 1.25 + 1e-12));
    }

    #[test]
    fn approach_grid_shape() {
        let t = approach_time_grid(-0.05, 1e-6, 0.8, 0.01).unwrap();
        assert_eq!(t[0], -0.05);
        assert!((t.last().unwrap() + 5e-8).abs() < 1e-20);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}
