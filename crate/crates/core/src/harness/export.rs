//! Trajectory CSV and summary JSON.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::single_shock::SingleShockSolution;
use crate::two_shock::TwoShockSolution;

pub const CSV_HEADER: [&str; 10] = ["t_frame", "t_phys", "x", "w", "phi", "u", "sigma1", "sigma2", "y1", "y2"];

/// One sample of a trajectory; x is physical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t_frame: f64,
    pub t_phys: f64,
    pub x: f64,
    pub w: f64,
    /// ε·φ.
    pub phi: f64,
    pub u: f64,
    pub sigma1: f64,
    pub sigma2: Option<f64>,
    pub y1: f64,
    pub y2: Option<f64>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            num(r.t_frame),
            num(r.t_phys),
            num(r.x),
            num(r.w),
            num(r.phi),
            num(r.u),
            num(r.sigma1),
            opt(r.sigma2),
            num(r.y1),
            opt(r.y2),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let bad = |m: String| Error::InvalidInput(format!("trajectory CSV: {m}"));
    let header = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let get = |i: usize| -> Result<Option<f64>> {
            let s = &rec[i];
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(format!("bad number {s:?}")))
            }
        };
        let req = |i: usize| get(i)?.ok_or_else(|| bad(format!("missing {}", CSV_HEADER[i])));
        rows.push(TrajectoryRow {
            t_frame: req(0)?,
            t_phys: req(1)?,
            x: req(2)?,
            w: req(3)?,
            phi: req(4)?,
            u: req(5)?,
            sigma1: req(6)?,
            sigma2: get(7)?,
            y1: req(8)?,
            y2: get(9)?,
        });
    }
    Ok(rows)
}

fn strided(n: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).step_by(stride.max(1)).collect();
    if n > 0 && v.last() != Some(&(n - 1)) {
        v.push(n - 1);
    }
    v
}

/// Rows of a single-shock run, physical time offset by `t0`.
pub fn single_rows(sol: &SingleShockSolution, t0: f64, level_stride: usize, node_stride: usize) -> Result<Vec<TrajectoryRow>> {
    let mut rows = Vec::new();
    for k in strided(sol.levels(), level_stride) {
        let y = sol.y_phys[k];
        for i in strided(sol.grid.len(), node_stride) {
            let phi = sol.corrector_at_node(k, i)?;
            let w = sol.w[k][i];
            rows.push(TrajectoryRow {
                t_frame: sol.times[k],
                t_phys: t0 + sol.times[k],
                x: sol.grid.x(i) + y,
                w,
                phi,
                u: w + phi,
                sigma1: sol.sigma[k],
                sigma2: None,
                y1: y,
                y2: None,
            });
        }
    }
    Ok(rows)
}

/// Rows of a two-shock run in physical coordinates.
pub fn two_shock_rows(sol: &TwoShockSolution, level_stride: usize, node_stride: usize) -> Result<Vec<TrajectoryRow>> {
    let eps = sol.constants.hilbert_scale;
    let mut rows = Vec::new();
    for k in strided(sol.levels(), level_stride) {
        let (tau, f, s) = (sol.times[k], sol.frame[k], sol.strengths[k]);
        let corr = sol.corrector(k)?;
        for i in strided(sol.grid.len(), node_stride) {
            let x = sol.grid.x(i, tau);
            let phi = eps * corr.value_in(x, sol.grid.region(i));
            let w = sol.w[k][i];
            rows.push(TrajectoryRow {
                t_frame: tau,
                t_phys: f.t_phys,
                x: x + f.y2,
                w,
                phi,
                u: w + phi,
                sigma1: s.sigma1,
                sigma2: Some(s.sigma2),
                y1: f.y1,
                y2: Some(f.y2),
            });
        }
    }
    Ok(rows)
}
