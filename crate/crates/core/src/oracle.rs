//! Brute-force minimisation over a promised-utility grid, for checking the
//! solvers on small instances.
//!
//! All coordinates but one run over the grid. The remaining one is solved
//! from the participation equality and must land inside the grid box, so
//! every visited point has participation binding. Prefixes are searched in
//! parallel.

use rayon::prelude::*;
use serde::Serialize;

use crate::belief::DeltaVector;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

pub const MAX_ORACLE_STATES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub v_lo: f64,
    pub v_hi: f64,
    pub points_per_dim: usize,
    /// Slack allowed on incentive rows. Relaxing them lets the grid
    /// undercut the true optimum by about `mu * tol`, so the default is 0.
    pub constraint_tol: f64,
}

impl GridSpec {
    pub fn new(v_lo: f64, v_hi: f64, points_per_dim: usize) -> Result<Self> {
        if !(v_lo < v_hi) || !v_lo.is_finite() || !v_hi.is_finite() {
            return Err(Error::InvalidGrid(format!("need finite v_lo < v_hi, got [{v_lo}, {v_hi}]")));
        }
        if points_per_dim < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points per dimension, got {points_per_dim}"
            )));
        }
        Ok(GridSpec {
            v_lo,
            v_hi,
            points_per_dim,
            constraint_tol: 0.0,
        })
    }

    pub fn with_constraint_tol(mut self, tol: f64) -> Self {
        self.constraint_tol = tol;
        self
    }

    pub fn step(&self) -> f64 {
        (self.v_hi - self.v_lo) / (self.points_per_dim - 1) as f64
    }

    fn point(&self, i: usize) -> f64 {
        self.v_lo + self.step() * i as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleMode {
    FirstBest,
    SecondBest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub cost: f64,
    pub v: Vec<f64>,
    pub wages: Vec<f64>,
    /// Number of grid points that passed every constraint.
    pub feasible_points: u64,
    /// Largest cost change from moving every coordinate of the returned
    /// point by one grid step.
    pub cell_variation: f64,
}

pub fn brute_force_min(
    inst: &ProblemInstance,
    target: &str,
    grid: GridSpec,
    mode: OracleMode,
) -> Result<OracleResult> {
    let n = inst.states();
    if n > MAX_ORACLE_STATES {
        return Err(Error::DimensionError(format!(
            "oracle handles at most {MAX_ORACLE_STATES} states, got {n}"
        )));
    }
    let t = inst.action_index(target)?;
    let spec = &inst.actions()[t];
    let u = inst.utility();
    let a = spec.agent_beliefs.probs().to_vec();
    let p = spec.principal_beliefs.probs().to_vec();
    let b = inst.reservation_utility() + spec.cost;

    let mut ics: Vec<(Vec<f64>, f64)> = Vec::new();
    if mode == OracleMode::SecondBest {
        for (k, alt) in inst.actions().iter().enumerate() {
            if k != t {
                let g = DeltaVector::between(&spec.agent_beliefs, &alt.agent_beliefs)?;
                ics.push((g.values().to_vec(), spec.cost - alt.cost));
            }
        }
    }
    let tol = grid.constraint_tol;
    // Participation is solved exactly for the state the agent finds most
    // likely, so moving along the participation plane never shifts that
    // coordinate by more than one grid step per step of the others.
    let pivot = (0..n).fold(0, |m, s| if a[s] > a[m] { s } else { m });
    if !(a[pivot] > 0.0) {
        return Err(Error::InvalidDistribution("agent beliefs have no positive entry".into()));
    }
    let free: Vec<usize> = (0..n).filter(|&s| s != pivot).collect();
    let step = grid.step();

    // Grid values inside the utility range and their costs, precomputed.
    let k = grid.points_per_dim;
    let values: Vec<f64> = (0..k).map(|i| grid.point(i)).collect();
    let valid: Vec<bool> = values.iter().map(|v| u.in_range(*v)).collect();
    let h: Vec<f64> = values
        .iter()
        .zip(&valid)
        .map(|(v, ok)| if *ok { u.h_raw(*v) } else { f64::INFINITY })
        .collect();
    let box_lo = grid.v_lo - 1e-12 * step;
    let box_hi = grid.v_hi + 1e-12 * step;

    let prefixes: u64 = (k as u64).pow(free.len() as u32);
    let best = (0..prefixes)
        .into_par_iter()
        .fold(
            || (f64::INFINITY, u64::MAX, 0u64),
            |mut acc, code| {
                let mut v = vec![0.0; n];
                let mut cost = 0.0;
                let mut c = code;
                for &s in &free {
                    let i = (c % k as u64) as usize;
                    c /= k as u64;
                    if !valid[i] {
                        return acc;
                    }
                    v[s] = values[i];
                    cost += p[s] * h[i];
                }
                let partial: f64 = free.iter().map(|&s| a[s] * v[s]).sum();
                let vp = (b - partial) / a[pivot];
                if !(vp >= box_lo && vp <= box_hi) || !u.in_range(vp) {
                    return acc;
                }
                v[pivot] = vp;
                let ok = ics.iter().all(|(g, rhs)| {
                    let val: f64 = (0..n).map(|s| g[s] * v[s]).sum();
                    val >= rhs - tol
                });
                if !ok {
                    return acc;
                }
                acc.2 += 1;
                cost += p[pivot] * u.h_raw(vp);
                if cost < acc.0 || (cost == acc.0 && code < acc.1) {
                    acc.0 = cost;
                    acc.1 = code;
                }
                acc
            },
        )
        .reduce(
            || (f64::INFINITY, u64::MAX, 0u64),
            |x, y| {
                let count = x.2 + y.2;
                // Ties resolved by index order for determinism.
                if x.0 < y.0 || (x.0 == y.0 && x.1 <= y.1) {
                    (x.0, x.1, count)
                } else {
                    (y.0, y.1, count)
                }
            },
        );
    if best.2 == 0 {
        return Err(Error::NoFeasiblePoint);
    }
    let mut v = vec![0.0; n];
    let mut c = best.1;
    for &s in &free {
        v[s] = values[(c % k as u64) as usize];
        c /= k as u64;
    }
    v[pivot] = (b - free.iter().map(|&s| a[s] * v[s]).sum::<f64>()) / a[pivot];
    let cell_variation = (0..n)
        .map(|s| {
            let here = u.h_raw(v[s]);
            let up = if u.in_range(v[s] + step) { (u.h_raw(v[s] + step) - here).abs() } else { 0.0 };
            let down = if u.in_range(v[s] - step) { (here - u.h_raw(v[s] - step)).abs() } else { 0.0 };
            p[s] * up.max(down)
        })
        .sum();
    Ok(OracleResult {
        cost: best.0,
        wages: v.iter().map(|x| u.h_raw(*x)).collect(),
        v,
        feasible_points: best.2,
        cell_variation,
    })
}

/// Solver cost next to the oracle's, on a grid spanning the solver's
/// promised utilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleAudit {
    pub action: String,
    pub mode: OracleMode,
    pub grid: GridSpec,
    pub solver_cost: f64,
    pub solver_v: Vec<f64>,
    pub oracle: OracleResult,
    /// `oracle.cost - solver_cost`.
    pub gap: f64,
    pub within_cell: bool,
}

/// Grid over `[min v - pad, max v + pad]` with `pad` a quarter of the
/// spread plus 0.05 utils, clipped to the utility range.
pub fn grid_around(inst: &ProblemInstance, v: &[f64], points_per_dim: usize) -> Result<GridSpec> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.25 * (hi - lo) + 0.05;
    let (rlo, rhi) = inst.utility().range();
    GridSpec::new((lo - pad).max(rlo), (hi + pad).min(rhi), points_per_dim)
}

pub fn audit(
    inst: &ProblemInstance,
    target: &str,
    points_per_dim: usize,
    mode: OracleMode,
    tol: f64,
) -> Result<OracleAudit> {
    let (wages, solver_cost) = match mode {
        OracleMode::FirstBest => {
            let fb = crate::first_best::solve_first_best(inst, target, tol)?;
            (fb.wages, fb.expected_cost_principal)
        }
        OracleMode::SecondBest => {
            let sb = crate::second_best::solve_second_best(inst, target, tol)?;
            (sb.wages, sb.expected_cost_principal)
        }
    };
    let u = inst.utility();
    let solver_v = wages.iter().map(|w| u.evaluate(*w)).collect::<Result<Vec<_>>>()?;
    let grid = grid_around(inst, &solver_v, points_per_dim)?;
    let oracle = match brute_force_min(inst, target, grid, mode) {
        Err(Error::NoFeasiblePoint) => {
            return Err(Error::GridTooCoarse(format!(
                "no grid point is feasible with {points_per_dim} points per dimension, but the solver found cost {solver_cost}"
            )))
        }
        other => other?,
    };
    let gap = oracle.cost - solver_cost;
    Ok(OracleAudit {
        action: target.to_string(),
        mode,
        grid,
        solver_cost,
        solver_v,
        within_cell: gap.abs() <= oracle.cell_variation,
        gap,
        oracle,
    })
}
