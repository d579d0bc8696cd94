//! Cost minimisation in promised-utility space.
//!
//! With `v_s = u(w_s)` the contracting program becomes
//!
//! ```text
//! min  sum_s p_s h(v_s)
//! s.t. a . v >= b            (participation, always binding)
//!      g_k . v >= d_k        (incentive rows, optional wage-box rows)
//! ```
//!
//! The objective is strictly convex and every constraint is linear. Each
//! candidate active set is solved by infeasible-start equality-constrained
//! Newton on the KKT system; a primal active-set loop picks the set whose
//! solution is primal and dual feasible. Multipliers follow the sign
//! convention `grad f = lambda a + sum_k mu_k g_k` with `lambda, mu >= 0`.

use std::collections::{BTreeSet, HashSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::utility::UtilityModel;

const MAX_NEWTON_ITERS: usize = 200;
const MAX_ENUMERATED_ROWS: usize = 16;

/// A linear inequality `coeffs . v >= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Row { coeffs, rhs }
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    pub fn slack(&self, v: &[f64]) -> f64 {
        self.value(v) - self.rhs
    }
}

/// Where an inequality row comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Incentive constraint against the alternative with this index in the
    /// caller's list.
    Incentive(usize),
    /// `v_s >= u(w_min)`.
    WageFloor(usize),
    /// `v_s <= u(w_max)`, stored as `-v_s >= -u(w_max)`.
    WageCeiling(usize),
}

/// Additional cost term `weight * h(v_state + shift)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedTerm {
    pub state: usize,
    pub weight: f64,
    pub shift: f64,
}

#[derive(Debug, Clone)]
pub struct VProgram<'a> {
    pub utility: &'a UtilityModel,
    /// Principal's probabilities: the cost weights.
    pub weights: Vec<f64>,
    /// Extra cost terms on shifted coordinates; empty for plain contracts.
    pub extra: Vec<ShiftedTerm>,
    pub participation: Row,
    pub rows: Vec<(RowKind, Row)>,
}

#[derive(Debug, Clone)]
pub struct VSolution {
    pub v: Vec<f64>,
    pub lambda: f64,
    /// One multiplier per inequality row; zero for inactive rows.
    pub duals: Vec<f64>,
    pub active: Vec<bool>,
    pub slacks: Vec<f64>,
    pub cost: f64,
}

struct EqSolve {
    v: Vec<f64>,
    /// Multipliers of [participation, active rows...] in the `>=` sign
    /// convention.
    multipliers: Vec<f64>,
}

impl<'a> VProgram<'a> {
    pub fn states(&self) -> usize {
        self.weights.len()
    }

    pub fn cost(&self, v: &[f64]) -> f64 {
        let base: f64 = self
            .weights
            .iter()
            .zip(v)
            .map(|(p, x)| p * self.utility.h_raw(*x))
            .sum();
        base + self
            .extra
            .iter()
            .map(|t| t.weight * self.utility.h_raw(v[t.state] + t.shift))
            .sum::<f64>()
    }

    /// Gradient and diagonal Hessian of the cost.
    fn derivatives(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = self.utility;
        let mut g: Vec<f64> = self.weights.iter().zip(v).map(|(p, x)| p * h.dh_raw(*x)).collect();
        let mut hs: Vec<f64> = self.weights.iter().zip(v).map(|(p, x)| p * h.d2h_raw(*x)).collect();
        for t in &self.extra {
            let x = v[t.state] + t.shift;
            g[t.state] += t.weight * h.dh_raw(x);
            hs[t.state] += t.weight * h.d2h_raw(x);
        }
        (g, hs)
    }

    /// Admissible interval for coordinate `s`: the utility range, narrowed
    /// by any shifted term on that coordinate.
    fn coord_range(&self, s: usize) -> (f64, f64) {
        let (mut lo, mut hi) = self.utility.range();
        for t in self.extra.iter().filter(|t| t.state == s) {
            let (l, h) = self.utility.range();
            lo = lo.max(l - t.shift);
            hi = hi.min(h - t.shift);
        }
        (lo, hi)
    }

    fn in_range(&self, v: &[f64]) -> bool {
        v.iter().enumerate().all(|(s, x)| {
            let (lo, hi) = self.coord_range(s);
            x.is_finite() && *x > lo && *x < hi
        })
    }

    /// A starting point inside the utility range, preferring the constant
    /// promise that meets participation exactly.
    fn start_point(&self) -> Vec<f64> {
        let n = self.states();
        let total: f64 = self.participation.coeffs.iter().sum();
        let target = if total != 0.0 {
            self.participation.rhs / total
        } else {
            self.participation.rhs
        };
        (0..n)
            .map(|s| {
                let (lo, hi) = self.coord_range(s);
                if target > lo && target < hi {
                    return target;
                }
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + (target - lo).abs().max(1.0),
                    (false, true) => hi - (hi - target).abs().max(1.0),
                    (false, false) => target,
                }
            })
            .collect()
    }

    /// Newton direction for `min phi` subject to `rows` as equalities,
    /// from the diagonal Hessian and a Schur complement. Returns the step
    /// and the new equality duals.
    fn newton_step(
        rows: &[&Row],
        grad: &[f64],
        hess: &[f64],
        rp: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = grad.len();
        let m = rows.len();
        if hess.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::DomainError("objective Hessian lost positivity".into()));
        }
        let schur = DMatrix::from_fn(m, m, |i, j| {
            (0..n)
                .map(|s| rows[i].coeffs[s] * rows[j].coeffs[s] / hess[s])
                .sum::<f64>()
        });
        let rhs = DVector::from_fn(m, |i, _| {
            rp[i] - (0..n).map(|s| rows[i].coeffs[s] * grad[s] / hess[s]).sum::<f64>()
        });
        let w = schur
            .lu()
            .solve(&rhs)
            .filter(|w| w.iter().all(|x| x.is_finite()))
            .ok_or_else(|| Error::Infeasible("binding constraints are linearly dependent".into()))?;
        let dv = (0..n)
            .map(|s| {
                let gtw: f64 = (0..m).map(|i| rows[i].coeffs[s] * w[i]).sum();
                -(grad[s] + gtw) / hess[s]
            })
            .collect();
        Ok((dv, w.iter().copied().collect()))
    }

    /// Strictly convex, coercive stand-in objective whose minimiser lies
    /// inside the utility range; used to find a feasible interior point.
    fn barrier(&self, s: usize, x: f64, target: f64) -> Option<(f64, f64, f64)> {
        let (lo, hi) = self.coord_range(s);
        if !(x > lo && x < hi) || !x.is_finite() {
            return None;
        }
        Some(match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                let (a, b) = (x - lo, hi - x);
                (-a.ln() - b.ln(), -1.0 / a + 1.0 / b, 1.0 / (a * a) + 1.0 / (b * b))
            }
            (true, false) => {
                let a = x - lo;
                (-a.ln() + a, -1.0 / a + 1.0, 1.0 / (a * a))
            }
            (false, true) => {
                let b = hi - x;
                (-b.ln() + b, 1.0 / b - 1.0, 1.0 / (b * b))
            }
            (false, false) => (0.5 * (x - target).powi(2), x - target, 1.0),
        })
    }

    /// Finds `v` inside the utility range with every row of `rows` holding
    /// with equality, by infeasible-start Newton on the barrier.
    fn interior_point(&self, rows: &[&Row], start: Vec<f64>) -> Result<Vec<f64>> {
        let n = self.states();
        let rhs_scale = rows.iter().map(|r| r.rhs.abs()).fold(1.0, f64::max);
        let target = start.iter().sum::<f64>() / n as f64;
        let eval = |v: &[f64], nu: &[f64]| -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
            let mut grad = Vec::with_capacity(n);
            let mut hess = Vec::with_capacity(n);
            for (s, x) in v.iter().enumerate() {
                let (_, g, h) = self.barrier(s, *x, target)?;
                grad.push(g);
                hess.push(h);
            }
            let mut rd = grad.clone();
            for (row, l) in rows.iter().zip(nu) {
                for (r, c) in rd.iter_mut().zip(&row.coeffs) {
                    *r += c * l;
                }
            }
            let rp = rows.iter().map(|r| r.value(v) - r.rhs).collect();
            Some((grad, hess, rd, rp))
        };
        let norm = |a: &[f64], b: &[f64]| a.iter().chain(b).map(|x| x * x).sum::<f64>().sqrt();
        let mut v = start;
        let mut nu = vec![0.0; rows.len()];
        let (mut grad, mut hess, mut rd, mut rp) =
            eval(&v, &nu).ok_or_else(|| Error::DomainError("start point outside utility range".into()))?;
        for _ in 0..MAX_NEWTON_ITERS {
            let rp_norm = rp.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if rp_norm <= 1e-13 * rhs_scale {
                return Ok(v);
            }
            let (dv, w) = Self::newton_step(rows, &grad, &hess, &rp)?;
            let dnu: Vec<f64> = w.iter().zip(&nu).map(|(a, b)| a - b).collect();
            let current = norm(&rd, &rp);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..100 {
                let vt: Vec<f64> = v.iter().zip(&dv).map(|(x, d)| x + t * d).collect();
                let nut: Vec<f64> = nu.iter().zip(&dnu).map(|(x, d)| x + t * d).collect();
                if let Some(e) = eval(&vt, &nut) {
                    if norm(&e.2, &e.3) <= (1.0 - 0.01 * t) * current {
                        accepted = Some((vt, nut, e));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((vt, nut, e)) = accepted else { break };
            v = vt;
            nu = nut;
            (grad, hess, rd, rp) = e;
        }
        let rp_norm = rp.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if rp_norm <= 1e-9 * rhs_scale {
            return Ok(v);
        }
        Err(Error::Infeasible(format!(
            "binding constraints cannot be met inside the utility range (residual {rp_norm:.3e})"
        )))
    }

    /// Minimises the cost subject to participation and the given rows, all
    /// as equalities: an interior feasible point first, then feasible-start
    /// Newton with an Armijo search that never leaves the utility range.
    fn solve_equalities(&self, active: &[usize], start: Option<&[f64]>) -> Result<EqSolve> {
        let n = self.states();
        let mut rows: Vec<&Row> = vec![&self.participation];
        rows.extend(active.iter().map(|&k| &self.rows[k].1));
        let m = rows.len();
        if m > n {
            return Err(Error::Infeasible(format!("{m} binding constraints for {n} states")));
        }
        let start = match start {
            Some(s) if self.in_range(s) => s.to_vec(),
            _ => self.start_point(),
        };
        let mut v = self.interior_point(&rows, start)?;
        let derivs = |v: &[f64]| self.derivatives(v);
        let stationarity = |grad: &[f64], nu: &[f64]| -> f64 {
            (0..n)
                .map(|s| (grad[s] + rows.iter().zip(nu).map(|(r, l)| r.coeffs[s] * l).sum::<f64>()).abs())
                .fold(0.0, f64::max)
        };
        let mut nu = vec![0.0; m];
        let mut f = self.cost(&v);
        let mut converged = false;
        for _ in 0..MAX_NEWTON_ITERS {
            let (grad, hess) = derivs(&v);
            let rp: Vec<f64> = rows.iter().map(|r| r.value(&v) - r.rhs).collect();
            let (dv, w) = Self::newton_step(&rows, &grad, &hess, &rp)?;
            nu = w;
            let grad_scale = grad.iter().fold(1e-300f64, |a, g| a.max(g.abs()));
            if stationarity(&grad, &nu) <= 1e-13 * grad_scale {
                converged = true;
                break;
            }
            let slope: f64 = grad.iter().zip(&dv).map(|(g, d)| g * d).sum();
            let mut t = 1.0;
            let mut accepted = None;
            // Past the resolution of the cost the Armijo test only sees
            // rounding, so the full step is taken while it reduces stationarity.
            if -slope <= 1e-12 * (1.0 + f.abs()) {
                let vt: Vec<f64> = v.iter().zip(&dv).map(|(x, d)| x + d).collect();
                if self.in_range(&vt) {
                    let (g1, h1) = derivs(&vt);
                    let rp1: Vec<f64> = rows.iter().map(|r| r.value(&vt) - r.rhs).collect();
                    if let Ok((_, w1)) = Self::newton_step(&rows, &g1, &h1, &rp1) {
                        if stationarity(&g1, &w1) < stationarity(&grad, &nu) {
                            v = vt;
                            f = self.cost(&v);
                            continue;
                        }
                    }
                }
                break;
            }
            for _ in 0..100 {
                let vt: Vec<f64> = v.iter().zip(&dv).map(|(x, d)| x + t * d).collect();
                if self.in_range(&vt) {
                    let ft = self.cost(&vt);
                    if ft <= f + 0.25 * t * slope.min(0.0) {
                        accepted = Some((vt, ft));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((vt, ft)) = accepted else { break };
            let moved = vt.iter().zip(&v).any(|(a, b)| a != b);
            v = vt;
            f = ft;
            if v.iter().any(|x| x.abs() > 1e15) {
                let len = dv.iter().map(|d| d * d).sum::<f64>().sqrt();
                return Err(Error::Unbounded {
                    direction: dv.iter().map(|d| d / len).collect(),
                });
            }
            if !moved {
                break;
            }
        }
        if !converged {
            let (grad, hess) = derivs(&v);
            let rp: Vec<f64> = rows.iter().map(|r| r.value(&v) - r.rhs).collect();
            if let Ok((_, w)) = Self::newton_step(&rows, &grad, &hess, &rp) {
                nu = w;
            }
            let grad_scale = grad.iter().fold(1e-300f64, |a, g| a.max(g.abs()));
            if stationarity(&grad, &nu) > 1e-9 * grad_scale {
                // Pinned against the edge of the utility range: the interior
                // first-order conditions have no solution.
                let coefs = self.coefficients(&rows, &nu);
                let (state, coefficient) = coefs
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(s, c)| (s, *c))
                    .unwrap_or((0, 0.0));
                return Err(Error::KktDegeneracy { state, coefficient });
            }
        }
        Ok(EqSolve {
            v,
            multipliers: nu.iter().map(|x| -x).collect(),
        })
    }

    /// `lambda a_s + sum mu_k g_ks` from Newton duals.
    fn coefficients(&self, rows: &[&Row], nu: &[f64]) -> Vec<f64> {
        (0..self.states())
            .map(|s| rows.iter().zip(nu).map(|(r, n)| -n * r.coeffs[s]).sum())
            .collect()
    }

    fn finish(&self, active: &[usize], sol: EqSolve) -> VSolution {
        let mut duals = vec![0.0; self.rows.len()];
        let mut flags = vec![false; self.rows.len()];
        for (i, &k) in active.iter().enumerate() {
            duals[k] = sol.multipliers[i + 1];
            flags[k] = true;
        }
        let slacks = self.rows.iter().map(|(_, r)| r.slack(&sol.v)).collect();
        VSolution {
            cost: self.cost(&sol.v),
            lambda: sol.multipliers[0],
            v: sol.v,
            duals,
            active: flags,
            slacks,
        }
    }

    /// Solves the program with a primal active-set loop started from
    /// `initial`. `slack_tol` is the amount by which an inactive row may be
    /// violated and `dual_tol` the amount by which an active multiplier may
    /// be negative.
    pub fn solve(&self, initial: &[usize], slack_tol: f64, dual_tol: f64) -> Result<VSolution> {
        let mut active: BTreeSet<usize> = initial.iter().copied().collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut warm: Option<Vec<f64>> = None;
        loop {
            let set: Vec<usize> = active.iter().copied().collect();
            if !seen.insert(set.clone()) {
                break;
            }
            let sol = match self.solve_equalities(&set, warm.as_deref()) {
                Ok(s) => s,
                Err(Error::Infeasible(_)) if !set.is_empty() => break,
                Err(e) => return Err(e),
            };
            let violated = self
                .rows
                .iter()
                .enumerate()
                .filter(|(k, _)| !active.contains(k))
                .map(|(k, (_, r))| (k, r.slack(&sol.v)))
                .filter(|(_, s)| *s < -slack_tol)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((k, _)) = violated {
                warm = Some(sol.v.clone());
                active.insert(k);
                continue;
            }
            let negative = set
                .iter()
                .enumerate()
                .map(|(i, &k)| (k, sol.multipliers[i + 1]))
                .filter(|(_, mu)| *mu < -dual_tol)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((k, _)) = negative {
                warm = Some(sol.v.clone());
                active.remove(&k);
                continue;
            }
            return Ok(self.finish(&set, sol));
        }
        self.enumerate(slack_tol, dual_tol)
    }

    /// Exhaustive search over active sets; used when the add/drop loop
    /// cycles or meets a dependent row set.
    fn enumerate(&self, slack_tol: f64, dual_tol: f64) -> Result<VSolution> {
        let k = self.rows.len();
        if k > MAX_ENUMERATED_ROWS {
            return Err(Error::NegativeMultiplier(format!(
                "active-set search cycled with {k} inequality rows"
            )));
        }
        let max_active = self.states().saturating_sub(1).min(k);
        let mut subsets: Vec<Vec<usize>> = (0u32..(1u32 << k))
            .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
            .filter(|s| s.len() <= max_active)
            .collect();
        subsets.sort_by_key(|s| s.len());
        let mut best: Option<VSolution> = None;
        let mut last_err = None;
        for set in subsets {
            let sol = match self.solve_equalities(&set, None) {
                Ok(s) => s,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let primal_ok = self
                .rows
                .iter()
                .enumerate()
                .filter(|(i, _)| !set.contains(i))
                .all(|(_, (_, r))| r.slack(&sol.v) >= -slack_tol);
            let dual_ok = sol.multipliers[1..].iter().all(|m| *m >= -dual_tol);
            if primal_ok && dual_ok {
                let cand = self.finish(&set, sol);
                if best.as_ref().is_none_or(|b| cand.cost < b.cost) {
                    best = Some(cand);
                }
            }
        }
        best.ok_or_else(|| match last_err {
            Some(Error::Infeasible(msg)) => Error::Infeasible(msg),
            _ => Error::NegativeMultiplier(
                "no active set satisfies primal and dual feasibility".into(),
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_point_solution() {
        // Log utility, both constraints binding pins v = (-0.5, 1.5).
        let u = UtilityModel::log();
        let prog = VProgram {
            utility: &u,
            extra: vec![],
            weights: vec![0.25, 0.75],
            participation: Row::new(vec![0.25, 0.75], 1.0),
            rows: vec![(RowKind::Incentive(0), Row::new(vec![-0.5, 0.5], 1.0))],
        };
        let sol = prog.solve(&[], 1e-12, 1e-12).unwrap();
        assert!((sol.v[0] + 0.5).abs() < 1e-12);
        assert!((sol.v[1] - 1.5).abs() < 1e-12);
        assert!(sol.active[0]);
        assert!(sol.duals[0] > 0.0);
        assert!(sol.lambda > 0.0);
    }

    #[test]
    fn unconstrained_rows_stay_inactive() {
        let u = UtilityModel::cara(1.0).unwrap();
        let prog = VProgram {
            utility: &u,
            extra: vec![],
            weights: vec![0.2, 0.3, 0.5],
            participation: Row::new(vec![0.2, 0.3, 0.5], -0.5),
            rows: vec![(RowKind::Incentive(0), Row::new(vec![-0.1, 0.0, 0.1], -10.0))],
        };
        let sol = prog.solve(&[], 1e-12, 1e-12).unwrap();
        assert!(!sol.active[0]);
        for v in &sol.v {
            assert!((v + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_dependent_rows() {
        let u = UtilityModel::log();
        let prog = VProgram {
            utility: &u,
            extra: vec![],
            weights: vec![0.5, 0.5],
            participation: Row::new(vec![0.5, 0.5], 0.0),
            rows: vec![(RowKind::Incentive(0), Row::new(vec![0.0, 0.0], 1.0))],
        };
        assert!(matches!(
            prog.solve(&[], 1e-12, 1e-12),
            Err(Error::Infeasible(_))
        ));
    }
}
