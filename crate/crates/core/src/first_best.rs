//! Observable-action contracts: risk sharing between a risk-neutral
//! principal and a risk-averse agent who disagree about the odds.
//!
//! Stationarity reads `pi^P_s = lambda pi^A_s u'(w_s)`, so for a given IR
//! multiplier every wage is `(u')^-1(pi^P_s / (lambda pi^A_s))`. The IR
//! residual is strictly increasing in `lambda`; the solver brackets it by
//! doubling/halving from the homogeneous-belief multiplier, bisects, then
//! polishes with Newton.

use serde::Serialize;

use crate::belief::{mlrp_compare, MlrpOrder};
use crate::error::{Error, Result};
use crate::instance::{ActionSpec, ProblemInstance};
use crate::shape::{classify, Monotonicity, WAGE_SHAPE_TOL};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstBestSolution {
    pub action: String,
    pub wages: Vec<f64>,
    /// Multiplier on participation.
    pub lambda: f64,
    /// Expected wage under the principal's beliefs.
    pub expected_cost_principal: f64,
    /// Expected wage under the agent's beliefs.
    pub expected_cost_agent_beliefs: f64,
    /// `sum pi^A u(w) - c - ubar`.
    pub ir_residual: f64,
    /// `|1 - lambda pi^A_s u'(w_s) / pi^P_s|` per state.
    pub foc_residuals: Vec<f64>,
    pub tol: f64,
}

struct Risk<'a> {
    inst: &'a ProblemInstance,
    action: &'a ActionSpec,
}

impl Risk<'_> {
    fn wages(&self, lambda: f64) -> Option<Vec<f64>> {
        let u = self.inst.utility();
        let pp = self.action.principal_beliefs.probs();
        let pa = self.action.agent_beliefs.probs();
        let w: Vec<f64> = pp
            .iter()
            .zip(pa)
            .map(|(p, a)| u.inv_du_raw(p / (lambda * a)))
            .collect();
        w.iter().all(|x| u.in_domain(*x)).then_some(w)
    }

    fn ir_residual(&self, wages: &[f64]) -> f64 {
        let u = self.inst.utility();
        let eu: f64 = self
            .action
            .agent_beliefs
            .probs()
            .iter()
            .zip(wages)
            .map(|(p, w)| p * u.u_raw(*w))
            .sum();
        eu - self.action.cost - self.inst.reservation_utility()
    }

    fn residual_at(&self, lambda: f64) -> Option<f64> {
        self.wages(lambda).map(|w| self.ir_residual(&w))
    }

    /// `dR/dlambda = sum -pi^A m^2 / (lambda u''(w))` with `m = pi^P / (lambda pi^A)`.
    fn slope(&self, lambda: f64, wages: &[f64]) -> f64 {
        let u = self.inst.utility();
        let pp = self.action.principal_beliefs.probs();
        let pa = self.action.agent_beliefs.probs();
        (0..wages.len())
            .map(|s| {
                let m = pp[s] / (lambda * pa[s]);
                -pa[s] * m * m / (lambda * u.d2u_raw(wages[s]))
            })
            .sum()
    }
}

pub fn solve_first_best(inst: &ProblemInstance, action: &str, tol: f64) -> Result<FirstBestSolution> {
    let idx = inst.action_index(action)?;
    inst.require_positive_beliefs(idx)?;
    let spec = &inst.actions()[idx];
    let risk = Risk { inst, action: spec };
    let u = inst.utility();

    let required = inst.reservation_utility() + spec.cost;
    if !u.in_range(required) {
        return Err(Error::NoBracket(format!(
            "required utility ubar + c = {required} lies outside the range of {} utility",
            u.family().name()
        )));
    }
    let lambda0 = 1.0 / u.du_raw(u.h_raw(required));
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::NoBracket(format!("initial multiplier {lambda0} is not usable")));
    }

    // Bracket: residual < 0 at lo, > 0 at hi. Wages leaving the domain count
    // as "no information" and stop the expansion in that direction.
    let r0 = risk
        .residual_at(lambda0)
        .ok_or_else(|| Error::NoBracket("wages at the initial multiplier leave the domain".into()))?;
    let (mut lo, mut hi) = (lambda0, lambda0);
    if r0 == 0.0 {
        lo = lambda0;
        hi = lambda0;
    } else if r0 < 0.0 {
        let mut found = false;
        for _ in 0..2100 {
            hi *= 2.0;
            match risk.residual_at(hi) {
                Some(r) if r > 0.0 => {
                    found = true;
                    break;
                }
                Some(r) if r <= 0.0 => lo = hi,
                _ => break,
            }
            if !hi.is_finite() {
                break;
            }
        }
        if !found {
            return Err(Error::NoBracket(
                "participation residual stays negative as lambda grows".into(),
            ));
        }
    } else {
        let mut found = false;
        for _ in 0..2100 {
            lo *= 0.5;
            match risk.residual_at(lo) {
                Some(r) if r < 0.0 => {
                    found = true;
                    break;
                }
                Some(_) => hi = lo,
                None => break,
            }
            if lo == 0.0 {
                break;
            }
        }
        if !found {
            return Err(Error::NoBracket(
                "participation residual stays positive as lambda shrinks".into(),
            ));
        }
    }

    // Geometric bisection to 1e-12 relative width.
    while hi / lo - 1.0 > 1e-12 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        match risk.residual_at(mid) {
            Some(r) if r < 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
    }
    let mut lambda = (lo * hi).sqrt();

    // Newton polish, kept inside the bracket.
    for _ in 0..3 {
        let Some(w) = risk.wages(lambda) else { break };
        let r = risk.ir_residual(&w);
        let slope = risk.slope(lambda, &w);
        if !(slope > 0.0) || r == 0.0 {
            break;
        }
        let next = lambda - r / slope;
        if next >= lo && next <= hi && risk.wages(next).is_some() {
            lambda = next;
        } else {
            break;
        }
    }

    let wages = risk
        .wages(lambda)
        .ok_or_else(|| Error::DomainError("first-best wages leave the utility domain".into()))?;
    let ir_residual = risk.ir_residual(&wages);
    if ir_residual.abs() > tol {
        return Err(Error::NoBracket(format!(
            "participation residual {ir_residual:.3e} above tolerance {tol:.1e}"
        )));
    }
    let pp = spec.principal_beliefs.probs();
    let pa = spec.agent_beliefs.probs();
    let foc_residuals = (0..wages.len())
        .map(|s| (1.0 - lambda * pa[s] * u.du_raw(wages[s]) / pp[s]).abs())
        .collect();
    Ok(FirstBestSolution {
        action: spec.name.clone(),
        expected_cost_principal: spec.principal_beliefs.expectation(&wages),
        expected_cost_agent_beliefs: spec.agent_beliefs.expectation(&wages),
        wages,
        lambda,
        ir_residual,
        foc_residuals,
        tol,
    })
}

/// Wage shape of a first-best contract. `order` is
/// `mlrp_compare(principal, agent)` for the action; it does not change the
/// classification but is checked against it by [`monotonicity_consistent`].
pub fn classify_monotonicity(sol: &FirstBestSolution, order: MlrpOrder) -> Monotonicity {
    let _ = order;
    classify(&sol.wages, WAGE_SHAPE_TOL)
}

/// Whether an observed first-best shape agrees with the MLRP ordering of the
/// principal's belief against the agent's: principal-dominant beliefs give
/// decreasing wages, agent-dominant beliefs increasing wages.
pub fn monotonicity_consistent(shape: Monotonicity, order: MlrpOrder) -> bool {
    match order {
        MlrpOrder::FDominatesG => shape.is_weakly_decreasing(),
        MlrpOrder::GDominatesF => shape.is_weakly_increasing(),
        MlrpOrder::Equal => shape == Monotonicity::Flat,
        MlrpOrder::Incomparable => true,
    }
}

/// Principal-vs-agent MLRP order for one action.
pub fn belief_order(inst: &ProblemInstance, action: &str) -> Result<MlrpOrder> {
    let a = inst.action(action)?;
    mlrp_compare(&a.principal_beliefs, &a.agent_beliefs)
}

/// Result of shifting `eps` of the principal's mass onto state `s` from
/// state `s_prime` and re-solving.
#[derive(Debug, Clone, Serialize)]
pub struct FirstBestCompStat {
    pub base: FirstBestSolution,
    pub perturbed: FirstBestSolution,
    pub s: usize,
    pub s_prime: usize,
    pub eps: f64,
    /// `perturbed - base` per state.
    pub wage_changes: Vec<f64>,
    /// Number of states whose wage moved by more than the strictness
    /// threshold.
    pub strict_moves: usize,
    /// `w_s` fell (weakly), every other wage rose (weakly), and at least two
    /// moved strictly.
    pub pattern_holds: bool,
    /// `w_s` fell and `w_{s'}` rose, both strictly. The remaining wages all
    /// move with the participation multiplier, so they can fall together
    /// when `pattern_holds` is false.
    pub pair_moves_hold: bool,
}

/// Threshold below which a wage change counts as no change.
pub const COMPSTAT_TOL: f64 = 1e-9;

pub fn first_best_compstat(
    inst: &ProblemInstance,
    action: &str,
    s: usize,
    s_prime: usize,
    eps: f64,
) -> Result<FirstBestCompStat> {
    let idx = inst.action_index(action)?;
    let spec = &inst.actions()[idx];
    let pp = &spec.principal_beliefs;
    if s >= pp.len() || s_prime >= pp.len() {
        return Err(Error::IndexOutOfRange {
            index: s.max(s_prime),
            len: pp.len(),
        });
    }
    let limit = pp.probs()[s].min(pp.probs()[s_prime]);
    if !(eps >= 0.0) || eps >= limit {
        return Err(Error::EpsilonTooLarge { eps, limit });
    }
    let base = solve_first_best(inst, action, DEFAULT_TOL)?;
    let shifted = pp.shifted(s, s_prime, eps)?;
    let pert_inst = inst.with_action_beliefs(idx, shifted, spec.agent_beliefs.clone())?;
    let perturbed = solve_first_best(&pert_inst, action, DEFAULT_TOL)?;
    let wage_changes: Vec<f64> = perturbed
        .wages
        .iter()
        .zip(&base.wages)
        .map(|(p, b)| p - b)
        .collect();
    let strict_moves = wage_changes.iter().filter(|d| d.abs() > COMPSTAT_TOL).count();
    let signs_ok = wage_changes.iter().enumerate().all(|(t, d)| {
        if t == s {
            *d <= COMPSTAT_TOL
        } else {
            *d >= -COMPSTAT_TOL
        }
    });
    let pair_moves_hold = wage_changes[s] < -COMPSTAT_TOL && wage_changes[s_prime] > COMPSTAT_TOL;
    Ok(FirstBestCompStat {
        pattern_holds: signs_ok && strict_moves >= 2,
        pair_moves_hold,
        base,
        perturbed,
        s,
        s_prime,
        eps,
        wage_changes,
        strict_moves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Distribution;
    use crate::utility::UtilityModel;

    fn d(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    fn single(u: UtilityModel, pp: &[f64], pa: &[f64], ubar: f64, cost: f64) -> ProblemInstance {
        let n = pp.len();
        ProblemInstance::new(
            (0..n).map(|i| i as f64 + 1.0).collect(),
            vec![ActionSpec::new("a", cost, d(pp), d(pa))],
            ubar,
            u,
        )
        .unwrap()
    }

    #[test]
    fn homogeneous_beliefs_give_constant_wage() {
        for u in [
            UtilityModel::log(),
            UtilityModel::cara(1.0).unwrap(),
            UtilityModel::sqrt(),
            UtilityModel::crra(2.0).unwrap(),
        ] {
            let ubar = if u.range().1 <= 0.0 { -0.8 } else { 0.7 };
            let inst = single(u.clone(), &[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5], ubar, 0.1);
            let sol = solve_first_best(&inst, "a", DEFAULT_TOL).unwrap();
            let target = u.inverse(ubar + 0.1).unwrap();
            for w in &sol.wages {
                assert!((w - target).abs() < 1e-8, "{u:?}");
            }
            assert_eq!(classify_monotonicity(&sol, MlrpOrder::Equal), Monotonicity::Flat);
        }
    }

    #[test]
    fn cara_two_state_closed_form() {
        // ubar + c = -e^{-3}
        let inst = single(
            UtilityModel::cara(1.0).unwrap(),
            &[0.5, 0.5],
            &[0.25, 0.75],
            -(-3.0f64).exp(),
            0.0,
        );
        let sol = solve_first_best(&inst, "a", DEFAULT_TOL).unwrap();
        assert!((sol.wages[0] - (3.0 - 2f64.ln())).abs() < 1e-10);
        assert!((sol.wages[1] - (3.0 + 1.5f64.ln())).abs() < 1e-10);
        assert!((sol.wages[0] - 2.3069).abs() < 1e-4);
        assert!((sol.wages[1] - 3.4055).abs() < 1e-4);
        assert!(sol.ir_residual.abs() <= 1e-9);
        assert_eq!(sol.foc_residuals.len(), 2);
        assert!(sol.foc_residuals.iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn log_two_state_matches_proportional_rule() {
        // Log utility: w_s = pi^P_s / (lambda pi^A_s)^-1 ... wages proportional
        // to pi^A_s / pi^P_s, scaled so that IR binds with ubar + c = 1.
        let inst = single(UtilityModel::log(), &[0.5, 0.5], &[0.25, 0.75], 1.0, 0.0);
        let sol = solve_first_best(&inst, "a", DEFAULT_TOL).unwrap();
        let ratio = [0.5, 1.5];
        // 0.25 ln(k 0.5) + 0.75 ln(k 1.5) = 1
        let k = (1.0 - 0.25 * 0.5f64.ln() - 0.75 * 1.5f64.ln()).exp();
        for (w, r) in sol.wages.iter().zip(ratio) {
            assert!((w - k * r).abs() < 1e-9);
        }
        assert_eq!(classify_monotonicity(&sol, MlrpOrder::GDominatesF), Monotonicity::Increasing);
    }

    #[test]
    fn proposition_one_directions() {
        let up = single(UtilityModel::sqrt(), &[0.5, 0.3, 0.2], &[0.2, 0.3, 0.5], 1.0, 0.2);
        let sol = solve_first_best(&up, "a", DEFAULT_TOL).unwrap();
        let order = belief_order(&up, "a").unwrap();
        assert_eq!(order, MlrpOrder::GDominatesF);
        assert_eq!(classify_monotonicity(&sol, order), Monotonicity::Increasing);
        assert!(monotonicity_consistent(Monotonicity::Increasing, order));

        let down = single(UtilityModel::sqrt(), &[0.2, 0.3, 0.5], &[0.5, 0.3, 0.2], 1.0, 0.2);
        let sol = solve_first_best(&down, "a", DEFAULT_TOL).unwrap();
        let order = belief_order(&down, "a").unwrap();
        assert_eq!(classify_monotonicity(&sol, order), Monotonicity::Decreasing);
    }

    #[test]
    fn cheaper_than_constant_wage() {
        let inst = single(UtilityModel::log(), &[0.3, 0.3, 0.4], &[0.2, 0.5, 0.3], 0.4, 0.3);
        let sol = solve_first_best(&inst, "a", DEFAULT_TOL).unwrap();
        let h = UtilityModel::log().inverse(0.7).unwrap();
        assert!(sol.expected_cost_principal < h);
        assert!(sol.expected_cost_agent_beliefs > h);
    }

    #[test]
    fn cara_compstat_leaves_unshifted_state() {
        let inst = single(
            UtilityModel::cara(1.0).unwrap(),
            &[0.2, 0.4, 0.4],
            &[0.3, 0.3, 0.4],
            -0.5,
            0.1,
        );
        let r = first_best_compstat(&inst, "a", 1, 2, 0.05).unwrap();
        assert!(r.pattern_holds);
        assert!(r.wage_changes[0].abs() < 1e-12);
        assert!(r.wage_changes[1] < 0.0);
        assert!(r.wage_changes[2] > 0.0);

        let zero = first_best_compstat(&inst, "a", 1, 2, 0.0).unwrap();
        assert_eq!(zero.base.wages, zero.perturbed.wages);
        assert!(!zero.pattern_holds);

        assert!(matches!(
            first_best_compstat(&inst, "a", 1, 2, 0.4),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn no_bracket_when_utility_unreachable() {
        // CARA range is (-inf, 0); ubar + c = 0.05 is unreachable.
        let a = ActionSpec::new("a", 0.1, d(&[0.5, 0.5]), d(&[0.4, 0.6]));
        let inst = ProblemInstance::new(
            vec![1.0, 2.0],
            vec![a],
            -0.05,
            UtilityModel::cara(1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            solve_first_best(&inst, "a", DEFAULT_TOL),
            Err(Error::NoBracket(_))
        ));
    }
}
