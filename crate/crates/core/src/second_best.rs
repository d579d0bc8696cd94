//! Hidden-action contracts: cheapest wage schedule that makes a target
//! action both acceptable and incentive compatible.
//!
//! The first-best contract is tried first; when it already satisfies every
//! incentive constraint it is optimal. Otherwise the program is solved in
//! utility space, where IR and IC are linear, by [`VProgram`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::belief::{mlrp_dominates, DeltaVector};
use crate::error::{Error, Result};
use crate::first_best::{solve_first_best, FirstBestSolution};
use crate::instance::ProblemInstance;
use crate::program::{Row, RowKind, VProgram};
use crate::shape::{classify, Monotonicity, WAGE_SHAPE_TOL};
use crate::utility::UtilityModel;

/// Incentive constraints count as satisfied down to this slack.
pub const IC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SecondBestOptions {
    pub tol: f64,
    /// Optional `[w_min, w_max]` wage box. Never applied unless given.
    pub wage_box: Option<(f64, f64)>,
}

impl SecondBestOptions {
    pub fn with_tol(tol: f64) -> Self {
        SecondBestOptions { tol, wage_box: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondBestSolution {
    pub action: String,
    pub wages: Vec<f64>,
    pub lambda: f64,
    /// Names of the non-target actions, in instance order.
    pub alternatives: Vec<String>,
    /// One multiplier per alternative.
    pub mu: Vec<f64>,
    /// `EU(target) - c(target) - (EU(alt) - c(alt))` under the agent's
    /// beliefs, per alternative.
    pub ic_slacks: Vec<f64>,
    pub binding: Vec<bool>,
    pub ir_residual: f64,
    pub expected_cost_principal: f64,
    pub coincides_with_first_best: bool,
    /// `|1 - (lambda pi^A_s + sum mu Delta_s) u'(w_s) / pi^P_s|` per state
    /// (wage-box multipliers included when a box is active).
    pub foc_residuals: Vec<f64>,
    /// Multipliers of the wage box rows as `(floor, ceiling)` per state;
    /// empty without a box.
    pub box_duals: Vec<(f64, f64)>,
    pub tol: f64,
}

impl SecondBestSolution {
    fn from_first_best(fb: FirstBestSolution, alternatives: Vec<String>, ic_slacks: Vec<f64>) -> Self {
        let k = alternatives.len();
        SecondBestSolution {
            action: fb.action,
            wages: fb.wages,
            lambda: fb.lambda,
            alternatives,
            mu: vec![0.0; k],
            binding: ic_slacks.iter().map(|s| s.abs() <= IC_TOL).collect(),
            ic_slacks,
            ir_residual: fb.ir_residual,
            expected_cost_principal: fb.expected_cost_principal,
            coincides_with_first_best: true,
            foc_residuals: fb.foc_residuals,
            box_duals: Vec::new(),
            tol: fb.tol,
        }
    }
}

fn agent_utility(inst: &ProblemInstance, action: usize, wages: &[f64]) -> f64 {
    let u = inst.utility();
    let a = &inst.actions()[action];
    a.agent_beliefs
        .probs()
        .iter()
        .zip(wages)
        .map(|(p, w)| p * u.u_raw(*w))
        .sum::<f64>()
        - a.cost
}

/// IC slacks of `wages` for `target` against every other action.
pub fn ic_slacks(inst: &ProblemInstance, target: usize, wages: &[f64]) -> Vec<f64> {
    let own = agent_utility(inst, target, wages);
    (0..inst.actions().len())
        .filter(|&k| k != target)
        .map(|k| own - agent_utility(inst, k, wages))
        .collect()
}

pub fn solve_second_best(inst: &ProblemInstance, target: &str, tol: f64) -> Result<SecondBestSolution> {
    solve_second_best_with(inst, target, &SecondBestOptions::with_tol(tol))
}

pub fn solve_second_best_with(
    inst: &ProblemInstance,
    target: &str,
    opts: &SecondBestOptions,
) -> Result<SecondBestSolution> {
    let t = inst.action_index(target)?;
    for k in 0..inst.actions().len() {
        inst.require_positive_beliefs(k)?;
    }
    let tol = if opts.tol > 0.0 { opts.tol } else { crate::first_best::DEFAULT_TOL };
    let u = inst.utility();
    if let Some((lo, hi)) = opts.wage_box {
        if !(lo < hi) || !u.in_domain(lo) || !u.in_domain(hi) {
            return Err(Error::Validation {
                path: "wage_box".into(),
                message: format!("[{lo}, {hi}] is not a non-empty interval inside the utility domain"),
            });
        }
    }
    let alternatives: Vec<usize> = (0..inst.actions().len()).filter(|&k| k != t).collect();
    let alt_names: Vec<String> = alternatives
        .iter()
        .map(|&k| inst.actions()[k].name.clone())
        .collect();

    let fb = solve_first_best(inst, target, tol)?;
    let fb_slacks = ic_slacks(inst, t, &fb.wages);
    let in_box = opts
        .wage_box
        .is_none_or(|(lo, hi)| fb.wages.iter().all(|w| *w >= lo && *w <= hi));
    if in_box && fb_slacks.iter().all(|s| *s >= -IC_TOL) {
        return Ok(SecondBestSolution::from_first_best(fb, alt_names, fb_slacks));
    }

    let spec = &inst.actions()[t];
    let n = inst.states();
    let high = &spec.agent_beliefs;
    let mut rows = Vec::new();
    for (i, &k) in alternatives.iter().enumerate() {
        let alt = &inst.actions()[k];
        let g = DeltaVector::between(high, &alt.agent_beliefs)?;
        rows.push((RowKind::Incentive(i), Row::new(g.values().to_vec(), spec.cost - alt.cost)));
    }
    if let Some((lo, hi)) = opts.wage_box {
        let (vlo, vhi) = (u.u_raw(lo), u.u_raw(hi));
        for s in 0..n {
            let mut e = vec![0.0; n];
            e[s] = 1.0;
            rows.push((RowKind::WageFloor(s), Row::new(e.clone(), vlo)));
            e[s] = -1.0;
            rows.push((RowKind::WageCeiling(s), Row::new(e, -vhi)));
        }
    }
    let program = VProgram {
        utility: u,
        weights: spec.principal_beliefs.probs().to_vec(),
        extra: Vec::new(),
        participation: Row::new(high.probs().to_vec(), inst.reservation_utility() + spec.cost),
        rows,
    };
    // Start from the most violated incentive constraint at the first best.
    let initial: Vec<usize> = fb_slacks
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < -IC_TOL)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| vec![i])
        .unwrap_or_default();
    let vs = program.solve(&initial, 1e-12, 1e-12)?;

    let wages: Vec<f64> = vs.v.iter().map(|x| u.h_raw(*x)).collect();
    let k_alt = alternatives.len();
    let mut mu: Vec<f64> = vs.duals[..k_alt].to_vec();
    let mut lambda = vs.lambda;
    let box_duals: Vec<(f64, f64)> = if opts.wage_box.is_some() {
        (0..n)
            .map(|s| (vs.duals[k_alt + 2 * s], vs.duals[k_alt + 2 * s + 1]))
            .collect()
    } else {
        Vec::new()
    };
    let box_active = box_duals.iter().any(|(a, b)| *a != 0.0 || *b != 0.0);

    let pp = spec.principal_beliefs.probs();
    let pa = high.probs();
    let deltas: Vec<Vec<f64>> = program.rows[..k_alt]
        .iter()
        .map(|(_, r)| r.coeffs.clone())
        .collect();
    let active_ic: Vec<usize> = (0..k_alt).filter(|&i| vs.active[i]).collect();

    // Single binding IC and no box: recover lambda from the summed FOC and
    // mu at the best-conditioned state.
    if active_ic.len() == 1 && !box_active {
        let i = active_ic[0];
        let dh: Vec<f64> = vs.v.iter().map(|x| u.dh_raw(*x)).collect();
        lambda = (0..n).map(|s| pp[s] * dh[s]).sum();
        let s_star = (0..n)
            .max_by(|a, b| deltas[i][*a].abs().total_cmp(&deltas[i][*b].abs()))
            .unwrap_or(0);
        mu[i] = (pp[s_star] * dh[s_star] - lambda * pa[s_star]) / deltas[i][s_star];
    }
    if let Some(m) = mu.iter().copied().find(|m| *m < -tol) {
        return Err(Error::NegativeMultiplier(format!(
            "incentive multiplier {m:.3e} is negative at the returned active set"
        )));
    }

    let mut wages = wages;
    if opts.wage_box.is_none() && !active_ic.is_empty() {
        let binding: Vec<(usize, &[f64], f64)> = active_ic
            .iter()
            .map(|&i| (i, program.rows[i].1.coeffs.as_slice(), program.rows[i].1.rhs))
            .collect();
        let target_utility = inst.reservation_utility() + spec.cost;
        polish(u, pp, pa, target_utility, &binding, &mut wages, &mut lambda, &mut mu);
    }

    let mut foc_residuals = Vec::with_capacity(n);
    for s in 0..n {
        let mut coef = lambda * pa[s] + (0..k_alt).map(|i| mu[i] * deltas[i][s]).sum::<f64>();
        if let Some(&(fl, ce)) = box_duals.get(s) {
            coef += fl - ce;
        }
        if !(coef > 0.0) && box_duals.is_empty() {
            return Err(Error::KktDegeneracy { state: s, coefficient: coef });
        }
        foc_residuals.push((1.0 - coef * u.du_raw(wages[s]) / pp[s]).abs());
    }

    let slacks = ic_slacks(inst, t, &wages);
    let ir_residual = agent_utility(inst, t, &wages) - inst.reservation_utility();
    Ok(SecondBestSolution {
        action: spec.name.clone(),
        expected_cost_principal: spec.principal_beliefs.expectation(&wages),
        lambda,
        alternatives: alt_names,
        binding: (0..k_alt).map(|i| vs.active[i]).collect(),
        mu,
        ic_slacks: slacks,
        ir_residual,
        coincides_with_first_best: false,
        foc_residuals,
        box_duals,
        wages,
        tol,
    })
}

fn kkt_residuals(
    u: &UtilityModel,
    pp: &[f64],
    pa: &[f64],
    target: f64,
    binding: &[(usize, &[f64], f64)],
    wages: &[f64],
    lambda: f64,
    mu: &[f64],
) -> Vec<f64> {
    let uw: Vec<f64> = wages.iter().map(|w| u.u_raw(*w)).collect();
    let mut r: Vec<f64> = (0..wages.len())
        .map(|s| {
            let coef = lambda * pa[s] + binding.iter().map(|(i, g, _)| mu[*i] * g[s]).sum::<f64>();
            pp[s] - coef * u.du_raw(wages[s])
        })
        .collect();
    r.push(pa.iter().zip(&uw).map(|(p, x)| p * x).sum::<f64>() - target);
    for (_, g, d) in binding {
        r.push(g.iter().zip(&uw).map(|(p, x)| p * x).sum::<f64>() - d);
    }
    r
}

/// Newton refinement of the binding KKT system in wage space. The refined
/// point is kept only while it lowers the largest weighted residual.
#[allow(clippy::too_many_arguments)]
fn polish(
    u: &UtilityModel,
    pp: &[f64],
    pa: &[f64],
    target: f64,
    binding: &[(usize, &[f64], f64)],
    wages: &mut Vec<f64>,
    lambda: &mut f64,
    mu: &mut [f64],
) {
    let n = wages.len();
    let m = n + 1 + binding.len();
    // Incentive residuals count as `mu * slack`, the size complementary
    // slackness sees.
    let merit = |r: &[f64], mu: &[f64]| {
        r.iter().enumerate().fold(0.0f64, |a, (j, x)| {
            let scale = if j > n { mu[binding[j - n - 1].0].abs().max(1.0) } else { 1.0 };
            a.max(scale * x.abs())
        })
    };
    let mut res = kkt_residuals(u, pp, pa, target, binding, wages, *lambda, mu);
    for _ in 0..4 {
        let mut jac = DMatrix::<f64>::zeros(m, m);
        for s in 0..n {
            let du = u.du_raw(wages[s]);
            let coef = *lambda * pa[s] + binding.iter().map(|(i, g, _)| mu[*i] * g[s]).sum::<f64>();
            jac[(s, s)] = -coef * u.d2u_raw(wages[s]);
            jac[(s, n)] = -pa[s] * du;
            jac[(n, s)] = pa[s] * du;
            for (j, (_, g, _)) in binding.iter().enumerate() {
                jac[(s, n + 1 + j)] = -g[s] * du;
                jac[(n + 1 + j, s)] = g[s] * du;
            }
        }
        let Some(step) = jac.lu().solve(&DVector::from_column_slice(&res)) else {
            return;
        };
        let w_new: Vec<f64> = (0..n).map(|s| wages[s] - step[s]).collect();
        if !w_new.iter().all(|w| u.in_domain(*w)) {
            return;
        }
        let l_new = *lambda - step[n];
        let mut mu_new = mu.to_vec();
        for (j, (i, _, _)) in binding.iter().enumerate() {
            mu_new[*i] -= step[n + 1 + j];
        }
        let r_new = kkt_residuals(u, pp, pa, target, binding, &w_new, l_new, &mu_new);
        if !(merit(&r_new, &mu_new) < merit(&res, mu)) {
            return;
        }
        *wages = w_new;
        *lambda = l_new;
        mu.copy_from_slice(&mu_new);
        res = r_new;
    }
}

/// Independent check of the KKT conditions of a returned contract, computed
/// from the wages and multipliers alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktCertificate {
    /// `max_s |pi^P_s - (lambda pi^A_s + sum mu Delta_s) u'(w_s)|`.
    pub stationarity: f64,
    pub ir_residual: f64,
    /// Most negative IC slack, or 0.
    pub primal_violation: f64,
    /// Most negative multiplier, or 0.
    pub dual_violation: f64,
    /// `max |mu_k * slack_k|`.
    pub complementarity: f64,
}

impl KktCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.stationarity <= tol
            && self.ir_residual.abs() <= tol
            && self.primal_violation <= tol
            && self.dual_violation <= tol
            && self.complementarity <= tol
    }
}

/// KKT certificate for a solution without a wage box.
pub fn kkt_certificate(inst: &ProblemInstance, sol: &SecondBestSolution) -> Result<KktCertificate> {
    let t = inst.action_index(&sol.action)?;
    let spec = &inst.actions()[t];
    let u = inst.utility();
    let pp = spec.principal_beliefs.probs();
    let pa = spec.agent_beliefs.probs();
    let deltas: Vec<DeltaVector> = sol
        .alternatives
        .iter()
        .map(|name| DeltaVector::between(&spec.agent_beliefs, &inst.action(name)?.agent_beliefs))
        .collect::<Result<_>>()?;
    let stationarity = (0..inst.states())
        .map(|s| {
            let coef = sol.lambda * pa[s]
                + sol
                    .mu
                    .iter()
                    .zip(&deltas)
                    .map(|(m, d)| m * d.values()[s])
                    .sum::<f64>();
            (pp[s] - coef * u.du_raw(sol.wages[s])).abs()
        })
        .fold(0.0, f64::max);
    let slacks = ic_slacks(inst, t, &sol.wages);
    Ok(KktCertificate {
        stationarity,
        ir_residual: agent_utility(inst, t, &sol.wages) - inst.reservation_utility(),
        primal_violation: slacks.iter().map(|s| -s).fold(0.0, f64::max),
        dual_violation: sol.mu.iter().map(|m| -m).fold(0.0, f64::max),
        complementarity: sol
            .mu
            .iter()
            .zip(&slacks)
            .map(|(m, s)| (m * s).abs())
            .fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionProfit {
    pub action: String,
    pub cost: f64,
    pub revenue: f64,
    pub wage_cost: f64,
    pub profit: f64,
    pub first_best_wage_cost: f64,
    pub coincides_with_first_best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionChoice {
    pub chosen: String,
    pub profits: Vec<ActionProfit>,
    /// Action that would be chosen if effort were observable.
    pub first_best_choice: String,
    pub matches_first_best_choice: bool,
    /// Two-action instances only: whether the costlier action's first-best
    /// wage bill exceeds the cheaper one's under the principal's beliefs, a
    /// necessary condition for the cheaper action to be more profitable when
    /// incentives are free.
    pub low_action_necessary_condition: Option<bool>,
}

const PROFIT_TIE_TOL: f64 = 1e-12;

fn argmax_profit<'a>(items: impl Iterator<Item = (&'a str, f64, f64)>) -> String {
    // (name, effort cost, profit); ties go to the lower effort cost.
    let mut best: Option<(&str, f64, f64)> = None;
    for (name, cost, profit) in items {
        best = match best {
            None => Some((name, cost, profit)),
            Some(b) => {
                let scale = 1.0f64.max(profit.abs()).max(b.2.abs());
                if profit > b.2 + PROFIT_TIE_TOL * scale
                    || ((profit - b.2).abs() <= PROFIT_TIE_TOL * scale && cost < b.1)
                {
                    Some((name, cost, profit))
                } else {
                    Some(b)
                }
            }
        };
    }
    best.map(|b| b.0.to_string()).unwrap_or_default()
}

pub fn choose_action(inst: &ProblemInstance, tol: f64) -> Result<ActionChoice> {
    let mut profits = Vec::new();
    for a in inst.actions() {
        let fb = solve_first_best(inst, &a.name, tol)?;
        let (wage_cost, coincides) = if inst.actions().len() == 1 {
            (fb.expected_cost_principal, true)
        } else {
            let sb = solve_second_best(inst, &a.name, tol)?;
            (sb.expected_cost_principal, sb.coincides_with_first_best)
        };
        let revenue = a.principal_beliefs.expectation(inst.outputs());
        profits.push(ActionProfit {
            action: a.name.clone(),
            cost: a.cost,
            revenue,
            wage_cost,
            profit: revenue - wage_cost,
            first_best_wage_cost: fb.expected_cost_principal,
            coincides_with_first_best: coincides,
        });
    }
    let chosen = argmax_profit(profits.iter().map(|p| (p.action.as_str(), p.cost, p.profit)));
    let first_best_choice = argmax_profit(
        profits
            .iter()
            .map(|p| (p.action.as_str(), p.cost, p.revenue - p.first_best_wage_cost)),
    );
    let low_action_necessary_condition = (profits.len() == 2).then(|| {
        let (hi, lo) = if profits[0].cost >= profits[1].cost {
            (&profits[0], &profits[1])
        } else {
            (&profits[1], &profits[0])
        };
        hi.first_best_wage_cost > lo.first_best_wage_cost
    });
    Ok(ActionChoice {
        matches_first_best_choice: chosen == first_best_choice,
        chosen,
        profits,
        first_best_choice,
        low_action_necessary_condition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub shape: Monotonicity,
    /// Agent's beliefs for the target dominate the principal's (MLRP).
    pub agent_dominates_principal: bool,
    /// Principal's beliefs for the target dominate the agent's.
    pub principal_dominates_agent: bool,
    /// Agent's beliefs for the target dominate those of every alternative.
    pub agent_actions_ordered: bool,
    /// Shape required by theory, when the premises pin one down.
    pub asserted: Option<Monotonicity>,
    /// False only when an asserted shape is contradicted.
    pub consistent: bool,
}

/// Wage shape of a second-best contract against the MLRP premises under
/// which it must be increasing: the agent more optimistic than the principal
/// about the target, and agent beliefs ordered across actions.
pub fn monotonicity_report(
    sol: &SecondBestSolution,
    inst: &ProblemInstance,
    target: &str,
) -> Result<MonotonicityReport> {
    let a = inst.action(target)?;
    let shape = classify(&sol.wages, WAGE_SHAPE_TOL);
    let agent_dominates_principal = mlrp_dominates(&a.agent_beliefs, &a.principal_beliefs)?;
    let principal_dominates_agent = mlrp_dominates(&a.principal_beliefs, &a.agent_beliefs)?;
    let mut agent_actions_ordered = true;
    for other in inst.actions().iter().filter(|o| o.name != a.name) {
        agent_actions_ordered &= mlrp_dominates(&a.agent_beliefs, &other.agent_beliefs)?;
    }
    let asserted = (agent_dominates_principal && agent_actions_ordered).then_some(Monotonicity::Increasing);
    let consistent = match asserted {
        Some(_) => shape.is_weakly_increasing(),
        None => true,
    };
    Ok(MonotonicityReport {
        shape,
        agent_dominates_principal,
        principal_dominates_agent,
        agent_actions_ordered,
        asserted,
        consistent,
    })
}

/// Shape of the principal's ex-post payoff `y_s - w_s`.
pub fn principal_payoff_monotonicity(wages: &[f64], inst: &ProblemInstance) -> Monotonicity {
    let payoff: Vec<f64> = inst.outputs().iter().zip(wages).map(|(y, w)| y - w).collect();
    classify(&payoff, WAGE_SHAPE_TOL)
}

/// Sampled curves behind the two-state picture, all in wage coordinates
/// `(w_0, w_1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureData {
    /// Indifference curve of each action through its participation level.
    pub indifference: Vec<Curve>,
    /// Iso-cost line of the principal through the contract.
    pub iso_cost: Curve,
    /// Intersection of the two indifference curves, if it exists.
    pub corner: Option<[f64; 2]>,
    pub contract: [f64; 2],
    pub ic_binding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub label: String,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
}

pub fn figure_data(inst: &ProblemInstance, grid: usize) -> Result<FigureData> {
    if inst.states() != 2 || inst.actions().len() != 2 {
        return Err(Error::DimensionError(format!(
            "figure data needs 2 states and 2 actions, got {} and {}",
            inst.states(),
            inst.actions().len()
        )));
    }
    if grid < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 samples, got {grid}")));
    }
    let u = inst.utility();
    let target = inst.costliest_action().to_string();
    let sol = solve_second_best(inst, &target, crate::first_best::DEFAULT_TOL)?;
    let contract = [sol.wages[0], sol.wages[1]];
    let ubar = inst.reservation_utility();

    // Span of w_0 values: around the contract and the certainty equivalents.
    let mut anchors = vec![contract[0], contract[1]];
    for a in inst.actions() {
        anchors.push(u.inverse(ubar + a.cost)?);
    }
    let lo_a = anchors.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_a = anchors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.5 * (hi_a - lo_a).max(0.5);
    let (dlo, dhi) = u.domain();
    let w_lo = (lo_a - pad).max(if dlo.is_finite() { dlo + 1e-9 * (1.0 + dlo.abs()) } else { f64::NEG_INFINITY });
    let w_hi = (hi_a + pad).min(if dhi.is_finite() { dhi } else { f64::INFINITY });

    let mut indifference = Vec::new();
    for a in inst.actions() {
        let p = a.agent_beliefs.probs();
        let level = ubar + a.cost;
        // w_1 = h((level - p0 u(w_0)) / p1) where defined.
        let mut w0s = Vec::with_capacity(grid);
        let mut w1s = Vec::with_capacity(grid);
        for i in 0..grid {
            let w0 = w_lo + (w_hi - w_lo) * i as f64 / (grid - 1) as f64;
            let v1 = (level - p[0] * u.u_raw(w0)) / p[1];
            if u.in_range(v1) {
                w0s.push(w0);
                w1s.push(u.h_raw(v1));
            }
        }
        indifference.push(Curve { label: a.name.clone(), w0: w0s, w1: w1s });
    }

    let pp = inst.action(&target)?.principal_beliefs.probs().to_vec();
    let cost = pp[0] * contract[0] + pp[1] * contract[1];
    let iso_w0: Vec<f64> = (0..grid)
        .map(|i| w_lo + (w_hi - w_lo) * i as f64 / (grid - 1) as f64)
        .collect();
    let iso_cost = Curve {
        label: "iso_cost".into(),
        w1: iso_w0.iter().map(|w0| (cost - pp[0] * w0) / pp[1]).collect(),
        w0: iso_w0,
    };

    // Corner: both participation levels hold, a 2x2 linear system in v.
    let a0 = inst.actions()[0].agent_beliefs.probs();
    let a1 = inst.actions()[1].agent_beliefs.probs();
    let b0 = ubar + inst.actions()[0].cost;
    let b1 = ubar + inst.actions()[1].cost;
    let det = a0[0] * a1[1] - a0[1] * a1[0];
    let corner = if det.abs() > 1e-14 {
        let v0 = (b0 * a1[1] - a0[1] * b1) / det;
        let v1 = (a0[0] * b1 - b0 * a1[0]) / det;
        (u.in_range(v0) && u.in_range(v1)).then(|| [u.h_raw(v0), u.h_raw(v1)])
    } else {
        None
    };
    Ok(FigureData {
        indifference,
        iso_cost,
        corner,
        contract,
        ic_binding: sol.binding.iter().any(|b| *b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Distribution;
    use crate::instance::ActionSpec;

    fn d(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    fn log_two_state(pp_high: &[f64]) -> ProblemInstance {
        ProblemInstance::new(
            vec![0.0, 10.0],
            vec![
                ActionSpec::new("H", 1.0, d(pp_high), d(&[0.25, 0.75])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.75, 0.25])),
            ],
            0.0,
            UtilityModel::log(),
        )
        .unwrap()
    }

    #[test]
    fn two_state_both_binding() {
        let inst = log_two_state(&[0.25, 0.75]);
        let sol = solve_second_best(&inst, "H", 1e-9).unwrap();
        assert!((sol.wages[0] - (-0.5f64).exp()).abs() < 1e-10);
        assert!((sol.wages[1] - 1.5f64.exp()).abs() < 1e-10);
        assert!(!sol.coincides_with_first_best);
        assert!(sol.mu[0] > 0.0);
        assert!(sol.binding[0]);
        let cert = kkt_certificate(&inst, &sol).unwrap();
        assert!(cert.holds(1e-9), "{cert:?}");
        // mu from the summed FOC: lambda = sum pi^P e^v, mu at state 0.
        let lambda = 0.25 * (-0.5f64).exp() + 0.75 * 1.5f64.exp();
        assert!((sol.lambda - lambda).abs() < 1e-9);
    }

    #[test]
    fn small_tilt_leaves_corner_unchanged() {
        let base = solve_second_best(&log_two_state(&[0.25, 0.75]), "H", 1e-9).unwrap();
        let tilt = solve_second_best(&log_two_state(&[0.251, 0.749]), "H", 1e-9).unwrap();
        for (a, b) in base.wages.iter().zip(&tilt.wages) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn optimistic_principal_gets_first_best() {
        // Principal almost sure of state 0: first best is strongly tilted
        // toward paying in state 1 and satisfies IC.
        let inst = log_two_state(&[0.97, 0.03]);
        let sol = solve_second_best(&inst, "H", 1e-9).unwrap();
        let fb = solve_first_best(&inst, "H", 1e-9).unwrap();
        assert!(sol.coincides_with_first_best);
        assert_eq!(sol.mu, vec![0.0]);
        assert_eq!(sol.wages, fb.wages);
        assert!(sol.ic_slacks[0] >= -IC_TOL);
        let fig = figure_data(&inst, 5).unwrap();
        assert!(!fig.ic_binding);
    }

    #[test]
    fn homogeneous_three_state_increasing() {
        let inst = ProblemInstance::new(
            vec![1.0, 2.0, 3.0],
            vec![
                ActionSpec::homogeneous("H", 0.5, d(&[0.2, 0.3, 0.5])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.5, 0.3, 0.2])),
            ],
            0.5,
            UtilityModel::log(),
        )
        .unwrap();
        let sol = solve_second_best(&inst, "H", 1e-9).unwrap();
        assert!(sol.mu[0] > 0.0);
        let rep = monotonicity_report(&sol, &inst, "H").unwrap();
        assert_eq!(rep.shape, Monotonicity::Increasing);
        assert_eq!(rep.asserted, Some(Monotonicity::Increasing));
        assert!(rep.consistent);
        let cert = kkt_certificate(&inst, &sol).unwrap();
        assert!(cert.holds(1e-8), "{cert:?}");
        let fb = solve_first_best(&inst, "H", 1e-9).unwrap();
        assert!(sol.expected_cost_principal > fb.expected_cost_principal);
    }

    #[test]
    fn boundary_optimum_is_reported() {
        // Square-root utility with a steep incentive requirement pushes the
        // lowest wage to zero, where the interior conditions fail.
        let inst = ProblemInstance::new(
            vec![1.0, 2.0, 3.0],
            vec![
                ActionSpec::homogeneous("H", 0.5, d(&[0.2, 0.3, 0.5])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.5, 0.3, 0.2])),
            ],
            0.5,
            UtilityModel::sqrt(),
        )
        .unwrap();
        assert!(matches!(
            solve_second_best(&inst, "H", 1e-9),
            Err(Error::KktDegeneracy { .. })
        ));
    }

    #[test]
    fn low_action_beliefs_of_principal_do_not_matter() {
        let mk = |pl: &[f64]| {
            ProblemInstance::new(
                vec![1.0, 2.0, 3.0],
                vec![
                    ActionSpec::new("H", 0.3, d(&[0.3, 0.3, 0.4]), d(&[0.2, 0.3, 0.5])),
                    ActionSpec::new("L", 0.0, d(pl), d(&[0.5, 0.3, 0.2])),
                ],
                0.5,
                UtilityModel::log(),
            )
            .unwrap()
        };
        let a = solve_second_best(&mk(&[0.6, 0.3, 0.1]), "H", 1e-9).unwrap();
        let b = solve_second_best(&mk(&[0.1, 0.1, 0.8]), "H", 1e-9).unwrap();
        assert_eq!(a.wages, b.wages);
    }

    #[test]
    fn three_actions_active_set() {
        let inst = ProblemInstance::new(
            vec![1.0, 2.0, 3.0],
            vec![
                ActionSpec::homogeneous("H", 0.6, d(&[0.1, 0.3, 0.6])),
                ActionSpec::homogeneous("M", 0.3, d(&[0.3, 0.4, 0.3])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.6, 0.3, 0.1])),
            ],
            0.5,
            UtilityModel::log(),
        )
        .unwrap();
        let sol = solve_second_best(&inst, "H", 1e-9).unwrap();
        let cert = kkt_certificate(&inst, &sol).unwrap();
        assert!(cert.holds(1e-8), "{cert:?}");
        assert!(sol.binding.iter().any(|b| *b));
        let mid = solve_second_best(&inst, "M", 1e-9).unwrap();
        assert!(kkt_certificate(&inst, &mid).unwrap().holds(1e-8));
    }

    #[test]
    fn wage_box_is_respected() {
        let inst = log_two_state(&[0.97, 0.03]);
        let free = solve_second_best(&inst, "H", 1e-9).unwrap();
        let cap = free.wages[1] * 0.9;
        let opts = SecondBestOptions {
            tol: 1e-9,
            wage_box: Some((1e-3, cap)),
        };
        let boxed = solve_second_best_with(&inst, "H", &opts).unwrap();
        assert!(boxed.wages[1] <= cap + 1e-9);
        assert!(boxed.box_duals[1].1 > 0.0);
        assert!(boxed.foc_residuals.iter().all(|r| *r < 1e-8), "{:?}", boxed.foc_residuals);
        assert!(boxed.expected_cost_principal >= free.expected_cost_principal);
    }

    #[test]
    fn action_choice() {
        let mut inst = log_two_state(&[0.25, 0.75]);
        let choice = choose_action(&inst, 1e-9).unwrap();
        assert_eq!(choice.chosen, "H");
        inst = inst.with_outputs(vec![5.0, 5.0 + 1e-9]).unwrap();
        let choice = choose_action(&inst, 1e-9).unwrap();
        assert_eq!(choice.chosen, "L");
        assert!(choice.low_action_necessary_condition.is_some());
    }

    #[test]
    fn payoff_shape() {
        let inst = log_two_state(&[0.25, 0.75]);
        assert_eq!(principal_payoff_monotonicity(&[1.0, 1.0], &inst), Monotonicity::Increasing);
        assert_eq!(principal_payoff_monotonicity(&[0.0, 12.0], &inst), Monotonicity::Decreasing);
    }

    #[test]
    fn figure_needs_two_states() {
        let inst = ProblemInstance::new(
            vec![1.0, 2.0, 3.0],
            vec![
                ActionSpec::homogeneous("H", 0.5, d(&[0.2, 0.3, 0.5])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.5, 0.3, 0.2])),
            ],
            0.5,
            UtilityModel::log(),
        )
        .unwrap();
        assert!(matches!(figure_data(&inst, 10), Err(Error::DimensionError(_))));
        let two = log_two_state(&[0.25, 0.75]);
        let fig = figure_data(&two, 2).unwrap();
        assert_eq!(fig.iso_cost.w0.len(), 2);
        let corner = fig.corner.unwrap();
        assert!((corner[0] - fig.contract[0]).abs() < 1e-9);
        assert!((corner[1] - fig.contract[1]).abs() < 1e-9);
    }
}
