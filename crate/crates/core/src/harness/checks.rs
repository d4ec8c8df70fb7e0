//! Pass/fail checks with measured values.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::function_core::sobolev_norm;
use crate::single_shock::SingleShockSolution;
use crate::two_shock::TwoShockSolution;

/// One named check; `slack` is how far the measurement sits inside its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    pub slack: f64,
}

impl Check {
    /// Passes when measured ≤ limit.
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= limit,
            measured,
            limit,
            slack: limit - measured,
        }
    }

    /// Passes when measured ≥ limit.
    pub fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: measured >= limit,
            measured,
            limit,
            slack: measured - limit,
        }
    }
}

/// Trace drift, H² cap and positive strength over every level of a single-shock run.
pub fn check_apriori_single(sol: &SingleShockSolution) -> Result<Vec<Check>> {
    let c = &sol.constants;
    let (l0, r0) = sol.grid.traces(&sol.w[0]);
    let mut drift = 0.0f64;
    let mut norm = 0.0f64;
    for (j, v) in sol.w.iter().enumerate() {
        let (l, r) = sol.grid.traces(v);
        drift = drift.max((l - l0).abs()).max((r - r0).abs());
        norm = norm.max(sobolev_norm(&sol.profile(j)?, 2, &[])?.total);
    }
    let sigma = sol.sigma.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::at_most("trace_drift", drift, c.delta0),
        Check::at_most("h2_cap", norm, c.m0),
        Check::at_least("shock_strength", sigma, 0.0),
    ])
}

/// Strength floors, H² cap and band pinching over every level of a two-shock run.
pub fn check_apriori_two(sol: &TwoShockSolution) -> Result<Vec<Check>> {
    let c = &sol.constants;
    let mut norm = 0.0f64;
    let mut pinch = 0.0f64;
    for (k, &tau) in sol.times.iter().enumerate() {
        norm = norm.max(sol.grid.norm(&sol.w[k], tau, 2)?);
        pinch = pinch.max(sol.pinching(k) / tau.abs().sqrt());
    }
    let s1 = sol.strengths.iter().map(|s| s.sigma1).fold(f64::INFINITY, f64::min);
    let s2 = sol.strengths.iter().map(|s| s.sigma2).fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::at_least("sigma1_floor", s1, c.delta1),
        Check::at_least("sigma2_floor", s2, c.delta2),
        Check::at_most("h2_cap", norm, c.m0),
        // max over levels of |w(τ+) − w(0−)|/√|τ|
        Check::at_most("pinching", pinch, c.m0),
    ])
}
