//! Comparative statics: re-solve along a grid of belief shifts and read off
//! the direction each wage moves.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::first_best::{solve_first_best, DEFAULT_TOL};
use crate::instance::ProblemInstance;
use crate::second_best::{ic_slacks, solve_second_best, IC_TOL};
use crate::shape::{classify, power, Monotonicity};

/// Adjacent wage movement below this counts as no movement.
pub const VERDICT_TOL: f64 = 1e-9;
/// Width of the bracket returned by [`detect_regime_change`].
pub const REGIME_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Party {
    Principal,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverKind {
    FirstBest,
    SecondBest,
}

/// Moves `eps` of `party`'s mass for `which_action` onto state `s` from
/// state `s_prime`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tilt {
    pub which_action: String,
    pub party: Party,
    pub s: usize,
    pub s_prime: usize,
}

impl Tilt {
    pub fn new(which_action: impl Into<String>, party: Party, s: usize, s_prime: usize) -> Self {
        Tilt {
            which_action: which_action.into(),
            party,
            s,
            s_prime,
        }
    }

    pub fn apply(&self, inst: &ProblemInstance, eps: f64) -> Result<ProblemInstance> {
        let idx = inst.action_index(&self.which_action)?;
        let spec = &inst.actions()[idx];
        let (mut p, mut a) = (spec.principal_beliefs.clone(), spec.agent_beliefs.clone());
        match self.party {
            Party::Principal => p = p.shifted(self.s, self.s_prime, eps)?,
            Party::Agent => a = a.shifted(self.s, self.s_prime, eps)?,
        }
        inst.with_action_beliefs(idx, p, a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub wages: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub mu: Option<Vec<f64>>,
    /// Wage variance under the agent's beliefs for the target action.
    pub power_agent: Option<f64>,
    pub power_principal: Option<f64>,
    pub coincides_with_first_best: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub action: String,
    pub tilt: Tilt,
    pub solver: SolverKind,
    pub eps_values: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// Per-state direction over the rows that solved.
    pub verdicts: Vec<Monotonicity>,
    /// First `eps` of each new regime where `coincides_with_first_best`
    /// changes between consecutive solved rows.
    pub regime_changes: Vec<f64>,
}

impl SweepResult {
    pub fn wage_paths(&self) -> Vec<Vec<f64>> {
        self.rows.iter().filter_map(|r| r.wages.clone()).collect()
    }

    pub fn lambda_path(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.lambda).collect()
    }

    pub fn mu_path(&self) -> Vec<Vec<f64>> {
        self.rows.iter().filter_map(|r| r.mu.clone()).collect()
    }

    pub fn power_path(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.power_agent).collect()
    }

    pub fn failures(&self) -> Vec<(f64, &str)> {
        self.rows
            .iter()
            .filter_map(|r| r.error.as_deref().map(|e| (r.eps, e)))
            .collect()
    }

    /// Path of state `k`'s wage over the solved rows.
    pub fn wage_path(&self, k: usize) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.wages.as_ref().map(|w| w[k])).collect()
    }
}

fn solve_row(inst: &ProblemInstance, action: &str, tilt: &Tilt, solver: SolverKind, eps: f64) -> SweepRow {
    let attempt = || -> Result<SweepRow> {
        let pert = tilt.apply(inst, eps)?;
        let (wages, lambda, mu, coincides) = match solver {
            SolverKind::FirstBest => {
                let fb = solve_first_best(&pert, action, DEFAULT_TOL)?;
                (fb.wages, fb.lambda, Vec::new(), None)
            }
            SolverKind::SecondBest => {
                let sb = solve_second_best(&pert, action, DEFAULT_TOL)?;
                (sb.wages, sb.lambda, sb.mu, Some(sb.coincides_with_first_best))
            }
        };
        let spec = pert.action(action)?;
        Ok(SweepRow {
            eps,
            power_agent: Some(power(spec.agent_beliefs.probs(), &wages)),
            power_principal: Some(power(spec.principal_beliefs.probs(), &wages)),
            wages: Some(wages),
            lambda: Some(lambda),
            mu: Some(mu),
            coincides_with_first_best: coincides,
            error: None,
        })
    };
    attempt().unwrap_or_else(|e| SweepRow {
        eps,
        wages: None,
        lambda: None,
        mu: None,
        power_agent: None,
        power_principal: None,
        coincides_with_first_best: None,
        error: Some(e.to_string()),
    })
}

/// Re-solves `action` at every `eps` of the grid. Rows that fail to solve
/// are recorded with their error; a grid value that leaves the simplex is
/// rejected up front.
pub fn sweep(
    inst: &ProblemInstance,
    action: &str,
    tilt: &Tilt,
    eps_grid: &[f64],
    solver: SolverKind,
) -> Result<SweepResult> {
    inst.action_index(action)?;
    if eps_grid.is_empty() {
        return Err(Error::InvalidGrid("empty epsilon grid".into()));
    }
    for &eps in eps_grid {
        if !eps.is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite epsilon {eps}")));
        }
        tilt.apply(inst, eps)?;
    }
    let rows: Vec<SweepRow> = eps_grid
        .par_iter()
        .map(|&eps| solve_row(inst, action, tilt, solver, eps))
        .collect();
    let states = inst.states();
    let verdicts = (0..states)
        .map(|k| {
            let path: Vec<f64> = rows.iter().filter_map(|r| r.wages.as_ref().map(|w| w[k])).collect();
            classify(&path, VERDICT_TOL)
        })
        .collect();
    let mut regime_changes = Vec::new();
    let solved: Vec<(f64, bool)> = rows
        .iter()
        .filter_map(|r| r.coincides_with_first_best.map(|c| (r.eps, c)))
        .collect();
    for w in solved.windows(2) {
        if w[0].1 != w[1].1 {
            regime_changes.push(w[1].0);
        }
    }
    Ok(SweepResult {
        action: action.to_string(),
        tilt: tilt.clone(),
        solver,
        eps_values: eps_grid.to_vec(),
        rows,
        verdicts,
        regime_changes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeChange {
    /// Midpoint of the final bracket.
    pub eps_star: f64,
    pub bracket: (f64, f64),
    /// `coincides_with_first_best` at the low and high end of the range.
    pub coincides_below: bool,
    pub coincides_above: bool,
}

/// Smallest IC slack of the first-best contract; the second-best contract
/// coincides with the first best exactly when this is at least `-IC_TOL`.
fn first_best_margin(inst: &ProblemInstance, action: &str, tilt: &Tilt, eps: f64) -> Result<f64> {
    let pert = tilt.apply(inst, eps)?;
    let t = pert.action_index(action)?;
    let fb = solve_first_best(&pert, action, DEFAULT_TOL)?;
    Ok(ic_slacks(&pert, t, &fb.wages)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        + IC_TOL)
}

/// Finds where `coincides_with_first_best` flips along `tilt` for `eps` in
/// `[lo, hi]`: a scan over `scan` points locates the first sign change of
/// the first-best IC margin, then bisection narrows it to [`REGIME_TOL`].
pub fn detect_regime_change(
    inst: &ProblemInstance,
    action: &str,
    tilt: &Tilt,
    lo: f64,
    hi: f64,
    scan: usize,
) -> Result<RegimeChange> {
    if !(lo < hi) || scan < 2 {
        return Err(Error::InvalidGrid(format!("need lo < hi and scan >= 2, got [{lo}, {hi}], {scan}")));
    }
    if inst.actions().len() < 2 {
        return Err(Error::DimensionError("regime detection needs at least two actions".into()));
    }
    tilt.apply(inst, lo)?;
    tilt.apply(inst, hi)?;
    let f = |e: f64| first_best_margin(inst, action, tilt, e);
    let grid: Vec<f64> = (0..scan)
        .map(|i| lo + (hi - lo) * i as f64 / (scan - 1) as f64)
        .collect();
    let signs: Vec<bool> = grid.par_iter().map(|&e| f(e).map(|m| m >= 0.0)).collect::<Result<_>>()?;
    let k = signs
        .windows(2)
        .position(|w| w[0] != w[1])
        .ok_or(Error::NoFlipInRange { lo, hi })?;
    let (mut a, mut b) = (grid[k], grid[k + 1]);
    let at_a = signs[k];
    while b - a > REGIME_TOL {
        let m = 0.5 * (a + b);
        if (f(m)? >= 0.0) == at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(RegimeChange {
        eps_star: 0.5 * (a + b),
        bracket: (a, b),
        coincides_below: signs[0],
        coincides_above: signs[scan - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Distribution;
    use crate::instance::ActionSpec;
    use crate::utility::UtilityModel;

    fn d(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    fn cara3() -> ProblemInstance {
        ProblemInstance::new(
            vec![1.0, 2.0, 3.0],
            vec![
                ActionSpec::new("H", 0.1, d(&[0.25, 0.35, 0.4]), d(&[0.2, 0.3, 0.5])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.5, 0.3, 0.2])),
            ],
            -0.6,
            UtilityModel::cara(1.0).unwrap(),
        )
        .unwrap()
    }

    fn grid(n: usize, top: f64) -> Vec<f64> {
        (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn first_best_cara_directions() {
        let tilt = Tilt::new("H", Party::Principal, 1, 2);
        let r = sweep(&cara3(), "H", &tilt, &grid(6, 0.1), SolverKind::FirstBest).unwrap();
        assert_eq!(
            r.verdicts,
            vec![Monotonicity::Flat, Monotonicity::Decreasing, Monotonicity::Increasing]
        );
        assert!(r.failures().is_empty());
    }

    #[test]
    fn second_best_cara_directions() {
        let tilt = Tilt::new("H", Party::Principal, 1, 2);
        let r = sweep(&cara3(), "H", &tilt, &grid(6, 0.1), SolverKind::SecondBest).unwrap();
        assert_eq!(r.verdicts[1], Monotonicity::Decreasing);
        assert_eq!(r.verdicts[2], Monotonicity::Increasing);
        assert_ne!(r.verdicts[0], Monotonicity::Flat);
        assert_eq!(r.power_path().len(), 6);
    }

    #[test]
    fn single_zero_eps() {
        let tilt = Tilt::new("H", Party::Agent, 0, 2);
        let r = sweep(&cara3(), "H", &tilt, &[0.0], SolverKind::SecondBest).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.verdicts.iter().all(|v| *v == Monotonicity::Flat));
    }

    #[test]
    fn rejects_large_eps() {
        let tilt = Tilt::new("H", Party::Principal, 1, 2);
        assert!(matches!(
            sweep(&cara3(), "H", &tilt, &[0.0, 0.5], SolverKind::FirstBest),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn two_state_flat_under_principal_sweep() {
        let inst = ProblemInstance::new(
            vec![0.0, 1.0],
            vec![
                ActionSpec::new("H", 1.0, d(&[0.5, 0.5]), d(&[0.25, 0.75])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.75, 0.25])),
            ],
            0.0,
            UtilityModel::log(),
        )
        .unwrap();
        let tilt = Tilt::new("H", Party::Principal, 1, 0);
        let r = sweep(&inst, "H", &tilt, &grid(5, 0.3), SolverKind::SecondBest).unwrap();
        assert!(r.verdicts.iter().all(|v| *v == Monotonicity::Flat), "{:?}", r.verdicts);
    }

    #[test]
    fn regime_flip_and_none() {
        let inst = ProblemInstance::new(
            vec![0.0, 1.0],
            vec![
                ActionSpec::homogeneous("H", 1.5f64.ln(), d(&[0.25, 0.75])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.75, 0.25])),
            ],
            2f64.ln(),
            UtilityModel::log(),
        )
        .unwrap();
        let toward_low = Tilt::new("H", Party::Principal, 0, 1);
        let rc = detect_regime_change(&inst, "H", &toward_low, 0.0, 0.6, 16).unwrap();
        assert!(!rc.coincides_below && rc.coincides_above);
        assert!(rc.bracket.1 - rc.bracket.0 <= REGIME_TOL);
        let finer = detect_regime_change(&inst, "H", &toward_low, 0.0, 0.6, 64).unwrap();
        assert!((finer.eps_star - rc.eps_star).abs() <= REGIME_TOL);
        let beyond = toward_low.apply(&inst, rc.bracket.1 + 1e-4).unwrap();
        let sb = solve_second_best(&beyond, "H", 1e-9).unwrap();
        assert!(sb.coincides_with_first_best && sb.mu[0] == 0.0);

        let away = Tilt::new("H", Party::Principal, 1, 0);
        assert!(matches!(
            detect_regime_change(&inst, "H", &away, 0.0, 0.2, 16),
            Err(Error::NoFlipInRange { .. })
        ));
    }
}
