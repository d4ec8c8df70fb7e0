//! Backward characteristic tracing with region tags, and the sparse map that
//! turns traced characteristics into the integral identity
//! w(t_j, x_i) = w̄(foot) + Σ_m Δt_m F(t_{m+½}, x(t_{m+½})).

use crate::error::{Error, Result};

/// Step-size controls for [`trace_back`].
#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    /// Upper bound on |speed| over the region of interest.
    pub vmax: f64,
    /// Smallest accepted step.
    pub h_min: f64,
    /// Hard cap on accepted steps per trace.
    pub max_steps: usize,
}

/// A field ẋ = a(t, x) split into regions by moving barriers.
pub trait SpeedField {
    /// Speed at (t, x), one-sided according to `region` when x sits on a barrier.
    fn speed(&self, t: f64, x: f64, region: u8) -> f64;
    /// Region label of (t, x); points on a barrier count as outside every region.
    fn region(&self, t: f64, x: f64) -> Option<u8>;
    /// Distance from x to the nearest barrier at time t.
    fn barrier_distance(&self, t: f64, x: f64) -> f64;
}

/// One RK4 step of size h (negative h integrates backward).
#[inline]
fn rk4<S: SpeedField + ?Sized>(field: &S, t: f64, x: f64, h: f64, region: u8) -> f64 {
    let k1 = field.speed(t, x, region);
    let k2 = field.speed(t + 0.5 * h, x + 0.5 * h * k1, region);
    let k3 = field.speed(t + 0.5 * h, x + 0.5 * h * k2, region);
    let k4 = field.speed(t + h, x + h * k3, region);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Traces the characteristic through (t0, x0) backward through the decreasing
/// times in `stops`, calling `record(k, x)` at each stop.
///
/// Steps are h = min(remaining, max(dist/(10·vmax), h_min)); a step that lands
/// outside the starting region is rejected and halved.
pub fn trace_back<S, R>(
    field: &S,
    t0: f64,
    x0: f64,
    region: u8,
    stops: &[f64],
    opts: &TraceOptions,
    mut record: R,
) -> Result<()>
where
    S: SpeedField + ?Sized,
    R: FnMut(usize, f64),
{
    let (mut t, mut x) = (t0, x0);
    let mut steps = 0usize;
    for (k, &stop) in stops.iter().enumerate() {
        if stop > t {
            return Err(Error::InvalidInput(format!("stop {stop} after current time {t}")));
        }
        while t > stop {
            let remaining = t - stop;
            let dist = field.barrier_distance(t, x);
            let mut h = remaining.min((dist / (10.0 * opts.vmax)).max(opts.h_min));
            loop {
                let xn = rk4(field, t, x, -h, region);
                let tn = if h == remaining { stop } else { t - h };
                if xn.is_finite() && field.region(tn, xn) == Some(region) {
                    t = tn;
                    x = xn;
                    break;
                }
                h *= 0.5;
                if h < 1e-6 * opts.h_min {
                    return Err(Error::PathCrossing { t, x });
                }
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::NonConvergence {
                    iterations: steps,
                    last_diff: remaining,
                });
            }
        }
        record(k, x);
    }
    Ok(())
}

/// An accepted backward path as (t, x) pairs.
#[derive(Debug, Clone, Default)]
pub struct Path {
    pub points: Vec<(f64, f64)>,
}

impl Path {
    pub fn end(&self) -> (f64, f64) {
        *self.points.last().unwrap()
    }
}

/// Integrates the characteristic through (t0, x0) back to `t_target`, recording
/// every accepted step.
pub fn integrate_characteristic<S: SpeedField + ?Sized>(
    field: &S,
    t0: f64,
    x0: f64,
    t_target: f64,
    opts: &TraceOptions,
) -> Result<Path> {
    if t_target > t0 {
        return Err(Error::InvalidInput("characteristics are traced backward in time".into()));
    }
    let region = field
        .region(t0, x0)
        .ok_or_else(|| Error::InvalidInput(format!("start ({t0}, {x0}) lies on a barrier")))?;
    let mut path = Path {
        points: vec![(t0, x0)],
    };
    let (mut t, mut x) = (t0, x0);
    while t > t_target {
        let remaining = t - t_target;
        let dist = field.barrier_distance(t, x);
        let mut h = remaining.min((dist / (10.0 * opts.vmax)).max(opts.h_min));
        loop {
            let xn = rk4(field, t, x, -h, region);
            let tn = if h == remaining { t_target } else { t - h };
            if xn.is_finite() && field.region(tn, xn) == Some(region) {
                t = tn;
                x = xn;
                break;
            }
            h *= 0.5;
            if h < 1e-6 * opts.h_min {
                return Err(Error::PathCrossing { t, x });
            }
        }
        path.points.push((t, x));
        if path.points.len() > opts.max_steps {
            return Err(Error::NonConvergence {
                iterations: path.points.len(),
                last_diff: remaining,
            });
        }
    }
    Ok(path)
}

/// Linear interpolation stencil into a flattened nodal array: value = (1−θ)v[i] + θv[i+1].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stencil {
    pub index: u32,
    pub theta: f64,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, v: &[f64]) -> f64 {
        let i = self.index as usize;
        if self.theta == 0.0 {
            v[i]
        } else {
            (1.0 - self.theta) * v[i] + self.theta * v[i + 1]
        }
    }
}

/// Locates x on sorted nodes occupying `offset..offset+nodes.len()` of a flat
/// array; points beyond the ends take the end value.
pub fn locate(nodes: &[f64], offset: usize, x: f64) -> Stencil {
    let n = nodes.len();
    if x <= nodes[0] {
        return Stencil {
            index: offset as u32,
            theta: 0.0,
        };
    }
    if x >= nodes[n - 1] {
        return Stencil {
            index: (offset + n - 1) as u32,
            theta: 0.0,
        };
    }
    let k = nodes.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let theta = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
    Stencil {
        index: (offset + k) as u32,
        theta,
    }
}

/// Feet values and half-level stencils of all characteristics of one outer iteration.
///
/// Level j node i carries j stencils, one per half level m < j.
#[derive(Debug, Clone)]
pub struct CharacteristicMap {
    pub feet: Vec<Vec<f64>>,
    pub stencils: Vec<Vec<Vec<Stencil>>>,
}

impl CharacteristicMap {
    /// Evaluates the integral identity for every level given F on half levels.
    pub fn integrate(&self, f_half: &[Vec<f64>], dt: &[f64]) -> Vec<Vec<f64>> {
        self.feet
            .iter()
            .zip(&self.stencils)
            .map(|(feet, st)| {
                feet.iter()
                    .zip(st)
                    .map(|(&foot, s)| {
                        foot + s
                            .iter()
                            .enumerate()
                            .map(|(m, sm)| dt[m] * sm.apply(&f_half[m]))
                            .sum::<f64>()
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(f64);

    impl SpeedField for Constant {
        fn speed(&self, _: f64, _: f64, _: u8) -> f64 {
            self.0
        }
        fn region(&self, _: f64, x: f64) -> Option<u8> {
            if x < 0.0 {
                Some(0)
            } else if x > 0.0 {
                Some(1)
            } else {
                None
            }
        }
        fn barrier_distance(&self, _: f64, x: f64) -> f64 {
            x.abs()
        }
    }

    #[test]
    fn locate_brackets() {
        let n = [0.0, 1.0, 3.0];
        assert_eq!(locate(&n, 5, 2.0), Stencil { index: 6, theta: 0.5 });
        assert_eq!(locate(&n, 0, -1.0).index, 0);
        assert_eq!(locate(&n, 0, 4.0).index, 2);
    }

    #[test]
    fn stops_are_recorded() {
        let opts = TraceOptions {
            vmax: 1.0,
            h_min: 1e-3,
            max_steps: 10_000,
        };
        let mut got = Vec::new();
        trace_back(&Constant(0.5), 1.0, 2.0, 1, &[0.5, 0.0], &opts, |k, x| got.push((k, x))).unwrap();
        assert!((got[0].1 - 1.75).abs() < 1e-13 && (got[1].1 - 1.5).abs() < 1e-13);
    }

    #[test]
    fn crossing_is_rejected() {
        let opts = TraceOptions {
            vmax: 1.0,
            h_min: 1e-3,
            max_steps: 10_000,
        };
        // moving right at unit speed, backward paths from x = 0.1 reach 0 at t = 0.9
        let r = trace_back(&Constant(1.0), 1.0, 0.1, 1, &[0.0], &opts, |_, _| {});
        assert!(matches!(r, Err(Error::PathCrossing { .. })));
    }
}
