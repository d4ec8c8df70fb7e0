//! Piecewise-regular functions, Sobolev norms on punctured domains and
//! Hilbert-transform evaluation.
//!
//! Two independent routes to H[f] are kept apart on purpose:
//! [`hilbert_piecewise`] integrates f' against ln|x − y| and adds one log term per
//! jump, while [`hilbert_pv`] only samples f and integrates the symmetrized
//! principal-value kernel.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::quadrature::{
    adaptive_gk, gauss, integrate_graded, levels_for_distance, log_kernel_integral,
    EndSingularity, DEFAULT_LEVELS, DEFAULT_ORDER,
};
use crate::spline::CubicSpline;

/// Default evaluation window.
pub const DEFAULT_WINDOW: (f64, f64) = (-8.0, 8.0);

/// Point evaluation of a real function that vanishes outside its window.
pub trait RealFn {
    fn window(&self) -> (f64, f64);
    fn value(&self, x: f64) -> f64;
    fn decays(&self) -> bool {
        true
    }
}

/// One-sided direction at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Samples of a function on a window, interpolated by a single not-a-knot spline.
#[derive(Debug, Clone)]
pub struct GridFn1D {
    window: (f64, f64),
    spline: CubicSpline,
    decay_flag: bool,
}

impl GridFn1D {
    pub fn new(window: (f64, f64), nodes: Vec<f64>, values: Vec<f64>, decay_flag: bool) -> Result<Self> {
        if nodes.len() < 4 || nodes.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "GridFn1D needs ≥ 4 nodes with matching values (got {} / {})",
                nodes.len(),
                values.len()
            )));
        }
        if !(window.0 < window.1) {
            return Err(Error::InvalidInput("empty window".into()));
        }
        if nodes[0] < window.0 || nodes[nodes.len() - 1] > window.1 {
            return Err(Error::InvalidInput("nodes must lie inside the window".into()));
        }
        let spline = CubicSpline::new(nodes, values)?;
        Ok(Self {
            window,
            spline,
            decay_flag,
        })
    }

    /// Uniform sampling of `f` with `n` nodes spanning the window.
    pub fn sample<F: Fn(f64) -> f64>(window: (f64, f64), n: usize, f: F) -> Result<Self> {
        let nodes = uniform_nodes(window.0, window.1, n);
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(window, nodes, values, true)
    }

    pub fn nodes(&self) -> &[f64] {
        self.spline.nodes()
    }

    pub fn values(&self) -> &[f64] {
        self.spline.values()
    }

    pub fn decay_flag(&self) -> bool {
        self.decay_flag
    }

    /// ∫ f² over the sampled range (exact for the interpolant).
    pub fn l2_norm_sq(&self) -> f64 {
        spline_integral(&self.spline, |v, _, _| v * v)
    }

    /// Moments ∫ f(y)·y^k dy for k < count.
    pub fn moments(&self, count: usize) -> Vec<f64> {
        (0..count)
            .map(|k| spline_integral_x(&self.spline, |v, y| v * y.powi(k as i32)))
            .collect()
    }
}

impl RealFn for GridFn1D {
    fn window(&self) -> (f64, f64) {
        self.window
    }

    fn value(&self, x: f64) -> f64 {
        if x < self.spline.start() || x > self.spline.end() {
            0.0
        } else {
            self.spline.eval(x)
        }
    }

    fn decays(&self) -> bool {
        self.decay_flag
    }
}

/// One-sided value and slope at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Trace {
    pub value: f64,
    pub slope: f64,
}

/// A function smooth between sorted breakpoints, one spline per piece.
///
/// Piece i spans [e_i, e_{i+1}] with e_0 the window start, e_{m+1} the window
/// end and e_1..e_m the breakpoints. The function is zero outside the window.
#[derive(Debug, Clone)]
pub struct PiecewiseRegularFn {
    window: (f64, f64),
    breakpoints: Vec<f64>,
    pieces: Vec<CubicSpline>,
    traces: Vec<[Trace; 2]>,
}

impl PiecewiseRegularFn {
    /// Builds from per-piece samples; each piece's nodes must start and end on its edges.
    pub fn from_pieces(window: (f64, f64), breakpoints: Vec<f64>, samples: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if samples.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                samples.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("breakpoints must be strictly sorted".into()));
        }
        let mut edges = Vec::with_capacity(breakpoints.len() + 2);
        edges.push(window.0);
        edges.extend_from_slice(&breakpoints);
        edges.push(window.1);
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("breakpoints must lie strictly inside the window".into()));
        }
        let mut pieces = Vec::with_capacity(samples.len());
        for (i, (x, y)) in samples.into_iter().enumerate() {
            let (lo, hi) = (edges[i], edges[i + 1]);
            let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            if x.is_empty() || (x[0] - lo).abs() > tol || (x[x.len() - 1] - hi).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "piece {i} nodes must span [{lo}, {hi}]"
                )));
            }
            pieces.push(CubicSpline::new(x, y)?);
        }
        let traces = (0..breakpoints.len())
            .map(|k| {
                let l = &pieces[k];
                let r = &pieces[k + 1];
                let (lv, ld, _) = l.eval_all(l.end());
                let (rv, rd, _) = r.eval_all(r.start());
                [
                    Trace { value: lv, slope: ld },
                    Trace { value: rv, slope: rd },
                ]
            })
            .collect();
        Ok(Self {
            window,
            breakpoints,
            pieces,
            traces,
        })
    }

    /// Samples `f(piece, x)` on `n` uniform nodes per piece.
    pub fn from_fn<F: Fn(usize, f64) -> f64>(
        window: (f64, f64),
        breakpoints: Vec<f64>,
        n: usize,
        f: F,
    ) -> Result<Self> {
        let edges = edges_of(window, &breakpoints);
        let samples = edges
            .windows(2)
            .enumerate()
            .map(|(i, e)| {
                let x = uniform_nodes(e[0], e[1], n.max(2));
                let y = x.iter().map(|&t| f(i, t)).collect();
                (x, y)
            })
            .collect();
        Self::from_pieces(window, breakpoints, samples)
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[CubicSpline] {
        &self.pieces
    }

    /// Stored [left, right] traces at breakpoint k.
    pub fn traces_at(&self, k: usize) -> [Trace; 2] {
        self.traces[k]
    }

    /// Overrides the stored traces at breakpoint k (e.g. after resampling).
    pub fn set_traces(&mut self, k: usize, traces: [Trace; 2]) {
        self.traces[k] = traces;
    }

    fn edges(&self) -> Vec<f64> {
        edges_of(self.window, &self.breakpoints)
    }

    /// Index of the piece containing x; points on a breakpoint go to the right piece.
    pub fn piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    /// Value, slope and second derivative on a given piece.
    pub fn eval_piece(&self, piece: usize, x: f64) -> (f64, f64, f64) {
        self.pieces[piece].eval_all(x)
    }

    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        if x < self.window.0 || x > self.window.1 {
            return 0.0;
        }
        let mut i = self.piece_index(x);
        if side == Side::Left && i > 0 && self.breakpoints[i - 1] == x {
            i -= 1;
        }
        self.pieces[i].eval(x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_side(x, Side::Right)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        if x < self.window.0 || x > self.window.1 {
            return 0.0;
        }
        self.pieces[self.piece_index(x)].deriv(x)
    }

    pub fn is_breakpoint(&self, p: f64) -> Option<usize> {
        self.breakpoints.iter().position(|&b| b == p)
    }

    /// New function with the same layout and values mapped node by node.
    pub fn map_values<F: Fn(usize, f64, f64) -> f64>(&self, f: F) -> Result<Self> {
        let samples = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let x = s.nodes().to_vec();
                let y = x.iter().zip(s.values()).map(|(&t, &v)| f(i, t, v)).collect();
                (x, y)
            })
            .collect();
        Self::from_pieces(self.window, self.breakpoints.clone(), samples)
    }

    /// Pointwise combination of two functions sharing the same node layout.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Result<Self> {
        if self.pieces.len() != other.pieces.len()
            || self
                .pieces
                .iter()
                .zip(&other.pieces)
                .any(|(a, b)| a.nodes() != b.nodes())
        {
            return Err(Error::InvalidInput("node layouts differ".into()));
        }
        let samples = self
            .pieces
            .iter()
            .zip(&other.pieces)
            .map(|(a, b)| {
                let y = a.values().iter().zip(b.values()).map(|(&u, &v)| f(u, v)).collect();
                (a.nodes().to_vec(), y)
            })
            .collect();
        Self::from_pieces(self.window, self.breakpoints.clone(), samples)
    }

    /// CSV rows `x,value,piece_index` with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,value,piece_index")?;
        for (i, s) in self.pieces.iter().enumerate() {
            for (x, v) in s.nodes().iter().zip(s.values()) {
                writeln!(out, "{:.16e},{:.16e},{}", x, v, i)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut samples: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if n == 0 {
                if line.trim() != "x,value,piece_index" {
                    return Err(Error::InvalidInput(format!("unexpected header '{line}'")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::InvalidInput(format!("line {}: expected 3 columns", n + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("line {}: {e}", n + 1)))
            };
            let x = parse(cols[0])?;
            let v = parse(cols[1])?;
            let p: usize = cols[2]
                .trim()
                .parse()
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", n + 1)))?;
            if p == samples.len() {
                samples.push((Vec::new(), Vec::new()));
            } else if p + 1 != samples.len() {
                return Err(Error::InvalidInput(format!("line {}: piece indices must be consecutive", n + 1)));
            }
            samples[p].0.push(x);
            samples[p].1.push(v);
        }
        if samples.is_empty() {
            return Err(Error::InvalidInput("no samples".into()));
        }
        let window = (samples[0].0[0], *samples.last().unwrap().0.last().unwrap());
        let breakpoints = samples[..samples.len() - 1]
            .iter()
            .map(|(x, _)| *x.last().unwrap())
            .collect();
        Self::from_pieces(window, breakpoints, samples)
    }
}

impl RealFn for PiecewiseRegularFn {
    fn window(&self) -> (f64, f64) {
        self.window
    }

    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
}

fn edges_of(window: (f64, f64), breakpoints: &[f64]) -> Vec<f64> {
    let mut e = Vec::with_capacity(breakpoints.len() + 2);
    e.push(window.0);
    e.extend_from_slice(breakpoints);
    e.push(window.1);
    e
}

/// n uniform nodes on [a, b] including both ends.
pub fn uniform_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let h = (b - a) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    v[n - 1] = b;
    v
}

/// ∫ q(f, f', f'') over the spline's span, Gauss 5 per interval.
fn spline_integral<Q: Fn(f64, f64, f64) -> f64>(s: &CubicSpline, q: Q) -> f64 {
    let x = s.nodes();
    (0..x.len() - 1)
        .map(|j| {
            gauss(
                |t| {
                    let (v, d, dd) = s.eval_on(j, t);
                    q(v, d, dd)
                },
                x[j],
                x[j + 1],
                5,
            )
        })
        .sum()
}

fn spline_integral_x<Q: Fn(f64, f64) -> f64>(s: &CubicSpline, q: Q) -> f64 {
    let x = s.nodes();
    (0..x.len() - 1)
        .map(|j| gauss(|t| q(s.eval_on(j, t).0, t), x[j], x[j + 1], 8))
        .sum()
}

/// One-sided limit of f at p.
pub fn trace(f: &PiecewiseRegularFn, p: f64, side: Side) -> Result<f64> {
    let (lo, hi) = f.window;
    if p < lo || p > hi {
        return Err(Error::Domain { x: p, lo, hi });
    }
    if let Some(k) = f.is_breakpoint(p) {
        let t = f.traces[k];
        return Ok(match side {
            Side::Left => t[0].value,
            Side::Right => t[1].value,
        });
    }
    Ok(f.pieces[f.piece_index(p)].eval(p))
}

/// One-sided limit of f' at p.
pub fn trace_slope(f: &PiecewiseRegularFn, p: f64, side: Side) -> Result<f64> {
    let (lo, hi) = f.window;
    if p < lo || p > hi {
        return Err(Error::Domain { x: p, lo, hi });
    }
    if let Some(k) = f.is_breakpoint(p) {
        let t = f.traces[k];
        return Ok(match side {
            Side::Left => t[0].slope,
            Side::Right => t[1].slope,
        });
    }
    Ok(f.pieces[f.piece_index(p)].deriv(p))
}

/// Left trace minus right trace at breakpoint p.
pub fn jump(f: &PiecewiseRegularFn, p: f64) -> Result<f64> {
    match f.is_breakpoint(p) {
        Some(k) => Ok(f.traces[k][0].value - f.traces[k][1].value),
        None => Err(Error::InvalidInput(format!("{p} is not a breakpoint"))),
    }
}

/// Sobolev norm of order ≤ 2 over the window minus the excluded intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevReport {
    pub order: usize,
    pub excluded: Vec<(f64, f64)>,
    pub per_piece_norms: Vec<f64>,
    pub total: f64,
}

pub fn sobolev_norm(f: &PiecewiseRegularFn, order: usize, excluded: &[(f64, f64)]) -> Result<SobolevReport> {
    if order > 2 {
        return Err(Error::Unsupported(format!("Sobolev order {order}")));
    }
    let (lo, hi) = f.window;
    let allowed = subtract_intervals((lo, hi), excluded);
    if allowed.iter().all(|&(a, b)| b <= a) {
        return Err(Error::InvalidInput("excluded intervals cover the whole window".into()));
    }
    let integrand = |v: f64, d: f64, dd: f64| match order {
        0 => v * v,
        1 => v * v + d * d,
        _ => v * v + d * d + dd * dd,
    };
    let mut per_piece = Vec::with_capacity(f.pieces.len());
    for s in &f.pieces {
        let x = s.nodes();
        let mut acc = 0.0;
        for j in 0..x.len() - 1 {
            for &(a, b) in &allowed {
                let l = a.max(x[j]);
                let r = b.min(x[j + 1]);
                if r > l {
                    acc += gauss(
                        |t| {
                            let (v, d, dd) = s.eval_on(j, t);
                            integrand(v, d, dd)
                        },
                        l,
                        r,
                        5,
                    );
                }
            }
        }
        per_piece.push(acc.max(0.0).sqrt());
    }
    let total = per_piece.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(SobolevReport {
        order,
        excluded: excluded.to_vec(),
        per_piece_norms: per_piece,
        total,
    })
}

/// [lo, hi] minus the union of `cut`, as sorted disjoint intervals.
fn subtract_intervals(span: (f64, f64), cut: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<(f64, f64)> = cut.iter().copied().filter(|c| c.1 > c.0).collect();
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut start = span.0;
    for (a, b) in cuts {
        if a > start {
            out.push((start, a.min(span.1)));
        }
        start = start.max(b);
        if start >= span.1 {
            break;
        }
    }
    if start < span.1 {
        out.push((start, span.1));
    }
    out
}

/// Principal-value Hilbert transform from point samples only.
///
/// Evaluates (1/π)∫₀^Y (f(x−y) − f(x+y))/y dy; a short stretch next to y = 0
/// is covered by graded panels and the rest adaptively.
pub fn hilbert_pv<F: RealFn + ?Sized>(f: &F, x: f64) -> Result<f64> {
    let (lo, hi) = f.window();
    if !f.decays() {
        return Err(Error::InvalidInput("hilbert_pv needs a decaying function".into()));
    }
    if x <= lo || x >= hi {
        return Err(Error::Domain { x, lo, hi });
    }
    let ymax = (x - lo).max(hi - x);
    let g = |y: f64| (f.value(x - y) - f.value(x + y)) / y;
    // shrink the graded stretch until it avoids any nearby break in f
    let mut y0 = (1e-2 * (hi - lo)).min(ymax);
    let mut near;
    let mut attempts = 0;
    loop {
        near = integrate_graded(g, 0.0, y0, DEFAULT_LEVELS, 0, DEFAULT_ORDER);
        let near_lo = integrate_graded(g, 0.0, y0, DEFAULT_LEVELS - 4, 0, 8);
        let err = (near - near_lo).abs();
        if err <= 1e-9 * (1.0 + near.abs()) {
            break;
        }
        attempts += 1;
        if attempts > 40 {
            return Err(Error::Accuracy { estimate: err });
        }
        y0 *= 0.5;
    }
    let (far, _) = adaptive_gk(g, y0, ymax, 1e-11, 1e-10, 20_000)?;
    Ok((near + far) / PI)
}

/// L² norm of H[f] over ℝ: nodal quadrature on the window plus a multipole tail.
///
/// Outside the window H[f](x) ≈ (1/π)Σ_k m_k / x^{k+1} with m_k = ∫ f y^k dy.
pub fn hilbert_l2_norm(f: &GridFn1D) -> Result<f64> {
    let nodes = f.nodes().to_vec();
    let (lo, hi) = f.window;
    let mut vals = Vec::with_capacity(nodes.len());
    for &x in &nodes {
        vals.push(if x <= lo || x >= hi { 0.0 } else { hilbert_pv(f, x)? });
    }
    let hf = GridFn1D::new(f.window, nodes, vals, true)?;
    let inner = hf.l2_norm_sq();
    let r = lo.abs().min(hi.abs());
    let m = f.moments(8);
    let c: Vec<f64> = m.iter().map(|v| v / PI).collect();
    let mut tail = 0.0;
    for (j, cj) in c.iter().enumerate() {
        for (k, ck) in c.iter().enumerate() {
            let p = (j + k + 1) as i32;
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            tail += cj * ck * (1.0 + sign) * r.powi(-p) / p as f64;
        }
    }
    Ok((inner + tail.max(0.0)).sqrt())
}

/// Hilbert transform by the integration-by-parts formula
/// (1/π)∫ f'(y) ln|x−y| dy + (1/π)Σ_i [f(y_i+) − f(y_i−)] ln|x − y_i|.
///
/// Window edges count as jumps to zero. The first term is integrated exactly
/// for the spline derivative on intervals near x and by Gauss-Legendre elsewhere.
pub fn hilbert_piecewise(f: &PiecewiseRegularFn, x: f64) -> Result<f64> {
    let edges = f.edges();
    if edges.contains(&x) {
        return Err(Error::SingularEvaluation(x));
    }
    let mut sum = 0.0;
    for s in &f.pieces {
        sum += spline_log_integral(s, x);
    }
    // jumps: window start, breakpoints, window end
    let first = &f.pieces[0];
    let last = &f.pieces[f.pieces.len() - 1];
    sum += first.values()[0] * (x - edges[0]).abs().ln();
    for (k, &b) in f.breakpoints.iter().enumerate() {
        let t = f.traces[k];
        sum += (t[1].value - t[0].value) * (x - b).abs().ln();
    }
    sum -= last.values()[last.values().len() - 1] * (x - edges[edges.len() - 1]).abs().ln();
    Ok(sum / PI)
}

/// ∫ S'(y) ln|x − y| dy over the spline's span.
fn spline_log_integral(s: &CubicSpline, x: f64) -> f64 {
    let nodes = s.nodes();
    let mut acc = 0.0;
    for j in 0..nodes.len() - 1 {
        let (a, b) = (nodes[j], nodes[j + 1]);
        let h = b - a;
        let dist = if x < a {
            a - x
        } else if x > b {
            x - b
        } else {
            0.0
        };
        if dist > 2.0 * h {
            acc += gauss(|y| s.eval_on(j, y).1 * (x - y).abs().ln(), a, b, 6);
        } else {
            // S' is quadratic: expand about x and integrate s^k ln|s| exactly
            let (_, p0, p1) = s.eval_on(j, x);
            let p2 = 0.5 * s.third_on(j);
            let (sa, sb) = (a - x, b - x);
            acc += p0 * (log_moment(sb, 0) - log_moment(sa, 0))
                + p1 * (log_moment(sb, 1) - log_moment(sa, 1))
                + p2 * (log_moment(sb, 2) - log_moment(sa, 2));
        }
    }
    acc
}

/// Antiderivative of s^k ln|s|, zero at s = 0.
#[inline]
fn log_moment(s: f64, k: i32) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let kp = (k + 1) as f64;
    s.powi(k + 1) * (s.abs().ln() - 1.0 / kp) / kp
}

/// Λ(z) = z ln|z| − z, the antiderivative of ln|z|.
#[inline]
pub fn lambda(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        z * (z.abs().ln() - 1.0)
    }
}

/// Hilbert transform of a piecewise-linear nodal function by product integration.
///
/// Pieces are contiguous; each shares its end node with the next piece's first
/// node (the breakpoint). Evaluation points may coincide with nodes. Jump terms
/// at internal breakpoints are left out so that callers can pair them with
/// singular terms of their own; window-edge jumps are included.
#[derive(Debug, Clone)]
pub struct LinearHilbert {
    nodes: Vec<Vec<f64>>,
    targets: Vec<f64>,
    cache: Option<Vec<f64>>,
}

impl LinearHilbert {
    pub fn new(nodes: Vec<Vec<f64>>, targets: Vec<f64>) -> Self {
        Self {
            nodes,
            targets,
            cache: None,
        }
    }

    /// Precomputes Λ(x_i − y_n) for repeated application on a fixed layout.
    pub fn with_cache(mut self) -> Self {
        let flat: Vec<f64> = self.nodes.iter().flatten().copied().collect();
        let mut m = Vec::with_capacity(flat.len() * self.targets.len());
        for &x in &self.targets {
            m.extend(flat.iter().map(|&y| lambda(x - y)));
        }
        self.cache = Some(m);
        self
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// H at every target for nodal values laid out like the nodes.
    pub fn apply(&self, values: &[Vec<f64>]) -> Vec<f64> {
        // weights c_n with Σ_j s_j(Λ(x−a_j) − Λ(x−b_j)) = Σ_n c_n Λ(x − y_n)
        let mut weights = Vec::new();
        for (x, v) in self.nodes.iter().zip(values) {
            let n = x.len();
            let slopes: Vec<f64> = (0..n - 1).map(|j| (v[j + 1] - v[j]) / (x[j + 1] - x[j])).collect();
            for i in 0..n {
                let before = if i > 0 { slopes[i - 1] } else { 0.0 };
                let after = if i + 1 < n { slopes[i] } else { 0.0 };
                weights.push(after - before);
            }
        }
        let flat: Vec<f64> = self.nodes.iter().flatten().copied().collect();
        let lo = self.nodes[0][0];
        let hi = *self.nodes.last().unwrap().last().unwrap();
        let v_lo = values[0][0];
        let v_hi = *values.last().unwrap().last().unwrap();
        self.targets
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let s: f64 = match &self.cache {
                    Some(m) => {
                        let row = &m[i * flat.len()..(i + 1) * flat.len()];
                        row.iter().zip(&weights).map(|(l, w)| l * w).sum()
                    }
                    None => flat.iter().zip(&weights).map(|(&y, w)| lambda(x - y) * w).sum(),
                };
                let mut edge = 0.0;
                if x != lo {
                    edge += v_lo * (x - lo).abs().ln();
                }
                if x != hi {
                    edge -= v_hi * (x - hi).abs().ln();
                }
                (s + edge) / PI
            })
            .collect()
    }
}

/// H[f] for a continuous, compactly supported f given through its derivative.
///
/// `breaks` must include the support ends and every point where f' is not smooth;
/// `log_points` lists breaks where f' has an integrable singularity.
pub fn hilbert_continuous<D: Fn(f64) -> f64>(deriv: D, breaks: &[f64], log_points: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let ends = EndSingularity {
            at_a: log_points.contains(&w[0]),
            at_b: log_points.contains(&w[1]),
        };
        acc += log_kernel_integral(&deriv, w[0], w[1], x, ends);
    }
    acc / PI
}

// ---------------------------------------------------------------------------
// H[g_b] and its x-derivatives

const TWO_OVER_PI: f64 = 2.0 / PI;

/// Derivatives η^{(j)}(y), j ≤ 5, of the quintic-smoothstep cutoff.
pub fn eta_derivs(y: f64) -> [f64; 6] {
    let a = y.abs();
    let mut d = [0.0; 6];
    if a <= 1.0 {
        d[0] = 1.0;
        return d;
    }
    if a >= 2.0 {
        return d;
    }
    let u = a - 1.0;
    let s = [
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u)),
        30.0 * u * u * (1.0 - u) * (1.0 - u),
        60.0 * u * (1.0 + u * (-3.0 + 2.0 * u)),
        60.0 + u * (-360.0 + 360.0 * u),
        -360.0 + 720.0 * u,
        720.0,
    ];
    // η(y) = 1 − s(|y| − 1); odd derivatives flip sign for y < 0
    d[0] = 1.0 - s[0];
    let sg = if y < 0.0 { -1.0 } else { 1.0 };
    for j in 1..6 {
        let f = if j % 2 == 1 { sg } else { 1.0 };
        d[j] = -s[j] * f;
    }
    d
}

/// g_b^{(n)}(y) for y > 0 and n ≤ 5.
pub fn gb_deriv(b: f64, y: f64, n: usize) -> f64 {
    if y <= 0.0 || y >= 2.0 {
        return 0.0;
    }
    let z = y + b;
    let blnb = if b > 0.0 { b * b.ln() } else { 0.0 };
    let psi = [
        z * z.ln() - blnb,
        z.ln() + 1.0,
        1.0 / z,
        -1.0 / (z * z),
        2.0 / (z * z * z),
        -6.0 / (z * z * z * z),
    ];
    let eta = eta_derivs(y);
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 0..=n {
        acc += binom * eta[j] * psi[n - j];
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    TWO_OVER_PI * acc
}

/// d^m/dz^m ln|z| for m ≥ 1.
#[inline]
fn log_kernel_deriv(z: f64, m: usize) -> f64 {
    let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    sign * fact[m - 1] / z.powi(m as i32)
}

/// dᵏ/dxᵏ H[g_b](x) for k ≤ 3.
///
/// For 0 < x < 2 a neighbourhood [x − r, x + r] of the singular point is handled
/// by repeated integration by parts (boundary terms plus L[G^{(k)}]) and the rest
/// by differentiating the kernel under the integral.
pub fn hilbert_gb(b: f64, x: f64, deriv_order: usize) -> Result<f64> {
    if deriv_order > 3 {
        return Err(Error::Unsupported(format!("derivative order {deriv_order}")));
    }
    let cap = 1.0 / (2.0 * std::f64::consts::E);
    if !(0.0..=cap * (1.0 + 1e-12)).contains(&b) {
        return Err(Error::InvalidInput(format!("offset b = {b} outside [0, 1/(2e)]")));
    }
    let g1 = |y: f64| gb_deriv(b, y, 1);
    if deriv_order == 0 {
        let mut acc = log_kernel_integral(g1, 0.0, 1.0, x, EndSingularity { at_a: true, at_b: false });
        acc += log_kernel_integral(g1, 1.0, 2.0, x, EndSingularity::default());
        return Ok(acc / PI);
    }
    let k = deriv_order;
    if x == 0.0 || x == 1.0 || x == 2.0 {
        return Err(Error::SingularEvaluation(x));
    }
    let far = |lo: f64, hi: f64, sing_lo: bool| -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let len = hi - lo;
        let dl = if x <= lo { lo - x } else { f64::INFINITY };
        let dh = if x >= hi { x - hi } else { f64::INFINITY };
        let mut la = if dl.is_finite() { levels_for_distance(dl, len) } else { 0 };
        let lb = if dh.is_finite() { levels_for_distance(dh, len) } else { 0 };
        if sing_lo {
            la = la.max(DEFAULT_LEVELS);
        }
        integrate_graded(|y| g1(y) * log_kernel_deriv(x - y, k), lo, hi, la, lb, DEFAULT_ORDER)
    };
    if !(0.0..=2.0).contains(&x) {
        return Ok((far(0.0, 1.0, true) + far(1.0, 2.0, false)) / PI);
    }
    let r = 0.5 * x.min((x - 1.0).abs()).min(2.0 - x);
    let (a, c) = (x - r, x + r);
    let mut acc = 0.0;
    // far part left of the neighbourhood
    if a <= 1.0 {
        acc += far(0.0, a, true);
    } else {
        acc += far(0.0, 1.0, true) + far(1.0, a, false);
    }
    // far part right of it
    if c <= 1.0 {
        acc += far(c, 1.0, false) + far(1.0, 2.0, false);
    } else {
        acc += far(c, 2.0, false);
    }
    // near part
    acc += log_kernel_integral(|y| gb_deriv(b, y, k + 1), a, c, x, EndSingularity::default());
    for j in 0..k {
        let m = k - 1 - j;
        let ha = gb_deriv(b, a, j + 1);
        let hc = gb_deriv(b, c, j + 1);
        acc += if m == 0 {
            ha * (x - a).abs().ln() - hc * (x - c).abs().ln()
        } else {
            ha * log_kernel_deriv(x - a, m) - hc * log_kernel_deriv(x - c, m)
        };
    }
    Ok(acc / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_subtraction() {
        let v = subtract_intervals((-1.0, 1.0), &[(-0.5, 0.0), (0.5, 2.0)]);
        assert_eq!(v, vec![(-1.0, -0.5), (0.0, 0.5)]);
        assert!(subtract_intervals((0.0, 1.0), &[(-1.0, 2.0)]).is_empty());
    }

    #[test]
    fn log_moment_matches_quadrature() {
        for k in 0..3 {
            let exact = log_moment(0.7, k) - log_moment(-0.2, k);
            let num = integrate_graded(|s| s.powi(k) * s.abs().ln(), -0.2, 0.0, 0, DEFAULT_LEVELS, 12)
                + integrate_graded(|s| s.powi(k) * s.abs().ln(), 0.0, 0.7, DEFAULT_LEVELS, 0, 12);
            assert!((exact - num).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn eta_derivatives_match_differences() {
        let h = 1e-5;
        for &y in &[1.2, 1.5, 1.9, -1.3, -1.75] {
            let d = eta_derivs(y);
            for j in 0..4 {
                let fd = (eta_derivs(y + h)[j] - eta_derivs(y - h)[j]) / (2.0 * h);
                assert!((fd - d[j + 1]).abs() < 1e-4 * (1.0 + d[j + 1].abs()), "y={y} j={j}");
            }
        }
    }

    #[test]
    fn gb_derivatives_match_differences() {
        let h = 1e-6;
        for &b in &[0.0, 0.01] {
            for &y in &[0.05, 0.4, 1.3, 1.8] {
                for n in 0..4 {
                    let fd = (gb_deriv(b, y + h, n) - gb_deriv(b, y - h, n)) / (2.0 * h);
                    let an = gb_deriv(b, y, n + 1);
                    assert!((fd - an).abs() < 1e-4 * (1.0 + an.abs()), "b={b} y={y} n={n}: {fd} {an}");
                }
            }
        }
    }
}
