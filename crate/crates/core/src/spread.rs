//! Four-outcome contracts solved in two steps through the utility spread
//! `m = u(w_3) - u(w_2)` between the two top states (0-based).
//!
//! For a fixed spread the top two states move together, so the problem
//! reduces to three states with lumped beliefs and participation/incentive
//! right-hand sides shifted by `pi'_3 m` and `Delta'_3 m`. The inner
//! objective keeps the top-state payment `delta'_3 (w_2 + M(m; w_2))`, so
//! its value function `V(m)` is the full cost at the best contract with
//! that spread. `V` is convex; the outer step minimises it by golden
//! section and polishes on the envelope derivative
//!
//! ```text
//! V'(m) = delta'_3 / u'(w_2 + M) - (lambda pi'_3 + mu Delta'_3)
//! ```

use serde::Serialize;

use crate::belief::{mlrp_dominates, reduce_distribution, DeltaVector};
use crate::error::{Error, Result};
use crate::instance::{ActionSpec, ProblemInstance};
use crate::program::{Row, RowKind, ShiftedTerm, VProgram};
use crate::second_best::{solve_second_best, SecondBestSolution};
use crate::utility::UtilityModel;

/// Extra wage `M` needed on top of `w` to raise utility by `m`:
/// `u(w + M) - u(w) = m`.
pub fn payment_gap(model: &UtilityModel, w: f64, m: f64) -> Result<f64> {
    let v = model.evaluate(w)? + m;
    if !model.in_range(v) {
        return Err(Error::RangeError(format!(
            "u({w}) + {m} = {v} is outside the utility range"
        )));
    }
    Ok(model.h_raw(v) - w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadProblem {
    base: ProblemInstance,
    reduced: ProblemInstance,
    high: usize,
    low: usize,
}

impl SpreadProblem {
    /// `base` must have four states and two actions; the costlier action is
    /// implemented.
    pub fn new(base: ProblemInstance) -> Result<Self> {
        if base.states() != 4 || base.actions().len() != 2 {
            return Err(Error::DimensionError(format!(
                "spread decomposition needs 4 states and 2 actions, got {} and {}",
                base.states(),
                base.actions().len()
            )));
        }
        let high = base.action_index(base.costliest_action())?;
        let low = 1 - high;
        let actions = base
            .actions()
            .iter()
            .map(|a| {
                Ok(ActionSpec::new(
                    a.name.clone(),
                    a.cost,
                    reduce_distribution(&a.principal_beliefs, 3)?,
                    reduce_distribution(&a.agent_beliefs, 3)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let reduced = ProblemInstance::new(
            base.outputs()[..3].to_vec(),
            actions,
            base.reservation_utility(),
            base.utility().clone(),
        )?;
        Ok(SpreadProblem { base, reduced, high, low })
    }

    pub fn base(&self) -> &ProblemInstance {
        &self.base
    }

    /// Three-state instance with the top two states lumped.
    pub fn reduced(&self) -> &ProblemInstance {
        &self.reduced
    }

    pub fn high_action(&self) -> &str {
        &self.base.actions()[self.high].name
    }

    /// Agent-high over principal-high over agent-low, all by MLRP.
    pub fn ordering_holds(&self) -> Result<bool> {
        let h = &self.base.actions()[self.high];
        let l = &self.base.actions()[self.low];
        Ok(mlrp_dominates(&h.agent_beliefs, &h.principal_beliefs)?
            && mlrp_dominates(&h.principal_beliefs, &l.agent_beliefs)?)
    }

    /// The same chain on the reduced beliefs.
    pub fn reduced_ordering_holds(&self) -> Result<bool> {
        let h = &self.reduced.actions()[self.high];
        let l = &self.reduced.actions()[self.low];
        Ok(mlrp_dominates(&h.agent_beliefs, &h.principal_beliefs)?
            && mlrp_dominates(&h.principal_beliefs, &l.agent_beliefs)?)
    }

    /// No state carries mass at the top: the spread is irrelevant.
    pub fn is_degenerate(&self) -> bool {
        let h = &self.base.actions()[self.high];
        let l = &self.base.actions()[self.low];
        [&h.principal_beliefs, &h.agent_beliefs, &l.agent_beliefs]
            .iter()
            .all(|d| d.probs()[3] == 0.0)
    }

    fn top(&self) -> (f64, f64, f64) {
        let h = &self.base.actions()[self.high];
        let l = &self.base.actions()[self.low];
        let pi4 = h.agent_beliefs.probs()[3];
        (h.principal_beliefs.probs()[3], pi4, pi4 - l.agent_beliefs.probs()[3])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerSolution {
    pub m: f64,
    /// Wages in the three lower states.
    pub wages: [f64; 3],
    /// Top-state wage `w_2 + M(m)`.
    pub top_wage: f64,
    pub lambda: f64,
    pub mu: f64,
    pub ic_binding: bool,
    /// `sum_{s<3} delta_s w_s` with the lumped principal beliefs.
    pub reduced_cost: f64,
    /// `delta'_3 M(m)`.
    pub spread_cost: f64,
    /// `V(m)`: the full expected wage bill.
    pub total: f64,
    /// `-(lambda pi'_3 + mu Delta'_3)`: the constraint part of `V'(m)`.
    pub constraint_derivative: f64,
    /// `V'(m)` by the envelope theorem.
    pub derivative: f64,
}

/// Best contract with the top-state utility spread fixed at `m`.
pub fn inner_cost(sp: &SpreadProblem, m: f64) -> Result<InnerSolution> {
    let u = sp.base.utility();
    let h = &sp.base.actions()[sp.high];
    let l = &sp.base.actions()[sp.low];
    let rh = &sp.reduced.actions()[sp.high];
    let rl = &sp.reduced.actions()[sp.low];
    for (k, a) in sp.reduced.actions().iter().enumerate() {
        if !a.agent_beliefs.is_solver_positive() {
            return Err(Error::Validation {
                path: format!("actions[{k}].agent_beliefs"),
                message: "lumped beliefs must be strictly positive".into(),
            });
        }
    }
    let (d4, pi4, delta4) = sp.top();
    let dp = h.principal_beliefs.probs();
    let delta = DeltaVector::between(&rh.agent_beliefs, &rl.agent_beliefs)?;
    let program = VProgram {
        utility: u,
        weights: vec![dp[0], dp[1], dp[2]],
        extra: vec![ShiftedTerm { state: 2, weight: d4, shift: m }],
        participation: Row::new(
            rh.agent_beliefs.probs().to_vec(),
            sp.base.reservation_utility() + h.cost - pi4 * m,
        ),
        rows: vec![(
            RowKind::Incentive(0),
            Row::new(delta.values().to_vec(), h.cost - l.cost - delta4 * m),
        )],
    };
    let vs = program.solve(&[0], 1e-12, 1e-12)?;
    let wages = [u.h_raw(vs.v[0]), u.h_raw(vs.v[1]), u.h_raw(vs.v[2])];
    let top_wage = u.h_raw(vs.v[2] + m);
    let d3 = rh.principal_beliefs.probs();
    let reduced_cost = d3[0] * wages[0] + d3[1] * wages[1] + d3[2] * wages[2];
    let spread_cost = d4 * (top_wage - wages[2]);
    let lambda = vs.lambda;
    let mu = vs.duals[0];
    let constraint_derivative = -(lambda * pi4 + mu * delta4);
    Ok(InnerSolution {
        m,
        wages,
        top_wage,
        lambda,
        mu,
        ic_binding: vs.active[0],
        reduced_cost,
        spread_cost,
        total: vs.cost,
        constraint_derivative,
        derivative: d4 * u.dh_raw(vs.v[2] + m) + constraint_derivative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub m: f64,
    pub reduced_cost: f64,
    pub spread_cost: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterSolution {
    pub m_star: f64,
    /// Full four-state contract.
    pub wages: [f64; 4],
    pub lambda: f64,
    pub mu: f64,
    pub total_cost: f64,
    /// `|delta'_3 M'(m*) - (lambda pi'_3 + mu Delta'_3)|`.
    pub foc_residual: f64,
    pub inner: InnerSolution,
    pub trace: Vec<TraceRow>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

struct Outer<'a> {
    sp: &'a SpreadProblem,
    trace: Vec<TraceRow>,
}

impl Outer<'_> {
    fn eval(&mut self, m: f64) -> Option<InnerSolution> {
        let inner = inner_cost(self.sp, m).ok()?;
        self.trace.push(TraceRow {
            m,
            reduced_cost: inner.reduced_cost,
            spread_cost: inner.spread_cost,
            total: inner.total,
        });
        Some(inner)
    }

    fn value(&mut self, m: f64) -> f64 {
        self.eval(m).map_or(f64::INFINITY, |s| s.total)
    }
}

/// Minimises `V(m)` over the spread and assembles the four-state contract.
/// `tol` bounds the outer first-order residual relative to the multiplier
/// term.
pub fn outer_minimize(sp: &SpreadProblem, tol: f64) -> Result<OuterSolution> {
    let mut outer = Outer { sp, trace: Vec::new() };
    let at_zero = inner_cost(sp, 0.0)?;
    outer.trace.push(TraceRow {
        m: 0.0,
        reduced_cost: at_zero.reduced_cost,
        spread_cost: at_zero.spread_cost,
        total: at_zero.total,
    });
    if sp.is_degenerate() || at_zero.derivative == 0.0 {
        return Ok(assemble(at_zero, outer.trace));
    }

    // Bracket the sign change of V' starting from m = 0, expanding in the
    // descent direction; an inner failure marks the edge of the domain.
    let dir = if at_zero.derivative < 0.0 { 1.0 } else { -1.0 };
    let scale = sp.base.reservation_utility().abs().max(1e-3);
    let mut step = 0.05 * scale;
    let mut near = 0.0;
    let mut far = None;
    for _ in 0..200 {
        let m = dir * step;
        match outer.eval(m) {
            Some(s) if s.derivative * dir < 0.0 => near = m,
            _ => {
                far = Some(m);
                break;
            }
        }
        step *= 2.0;
    }
    let far = far.ok_or_else(|| Error::NoBracket("outer derivative keeps its sign".into()))?;
    // The last point with the descent sign, halved, still lies before the
    // minimiser.
    let (mut a, mut b) = if dir > 0.0 { (near / 2.0, far) } else { (far, near / 2.0) };

    // Golden section down to a modest width.
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = outer.value(x1);
    let mut f2 = outer.value(x2);
    for _ in 0..200 {
        if b - a <= 1e-4 * (scale + a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = outer.value(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = outer.value(x2);
        }
    }

    // Polish: bisection on the sign of the envelope derivative.
    let mut best = if f1 <= f2 { x1 } else { x2 };
    let mut best_sol = outer
        .eval(best)
        .ok_or_else(|| Error::NoBracket("outer search lost the feasible region".into()))?;
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * (scale + a.abs().max(b.abs())) {
            break;
        }
        let mid = 0.5 * (a + b);
        match outer.eval(mid) {
            Some(s) => {
                if s.derivative < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if s.derivative.abs() <= best_sol.derivative.abs() {
                    best = mid;
                    best_sol = s;
                }
                if best_sol.derivative == 0.0 {
                    break;
                }
            }
            None => {
                if mid > best {
                    b = mid;
                } else {
                    a = mid;
                }
            }
        }
    }
    let scale_d = 1.0 + best_sol.constraint_derivative.abs();
    if best_sol.derivative.abs() > tol * scale_d {
        return Err(Error::NoBracket(format!(
            "outer first-order residual {:.3e} above tolerance",
            best_sol.derivative.abs()
        )));
    }
    Ok(assemble(best_sol, outer.trace))
}

fn assemble(inner: InnerSolution, trace: Vec<TraceRow>) -> OuterSolution {
    OuterSolution {
        m_star: inner.m,
        wages: [inner.wages[0], inner.wages[1], inner.wages[2], inner.top_wage],
        lambda: inner.lambda,
        mu: inner.mu,
        total_cost: inner.total,
        foc_residual: inner.derivative.abs(),
        inner,
        trace,
    }
}

/// Two-step solution next to the direct four-state solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iterate4Report {
    pub iterative: OuterSolution,
    pub direct: SecondBestSolution,
    pub cost_delta: f64,
    pub max_wage_delta: f64,
    pub lambda_delta: f64,
    pub mu_delta: f64,
    pub ordering_holds: bool,
}

pub fn compare_with_direct(sp: &SpreadProblem, tol: f64) -> Result<Iterate4Report> {
    let iterative = outer_minimize(sp, tol)?;
    let direct = solve_second_best(&sp.base, sp.high_action(), tol)?;
    let max_wage_delta = iterative
        .wages
        .iter()
        .zip(&direct.wages)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Iterate4Report {
        cost_delta: (iterative.total_cost - direct.expected_cost_principal).abs(),
        max_wage_delta,
        lambda_delta: (iterative.lambda - direct.lambda).abs(),
        mu_delta: (iterative.mu - direct.mu[0]).abs(),
        ordering_holds: sp.ordering_holds()?,
        iterative,
        direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Distribution;

    fn d(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    fn four() -> SpreadProblem {
        // agent-H over principal-H over agent-L.
        let inst = ProblemInstance::new(
            vec![1.0, 2.0, 3.0, 4.0],
            vec![
                ActionSpec::new("H", 0.1, d(&[0.15, 0.2, 0.3, 0.35]), d(&[0.1, 0.2, 0.3, 0.4])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.4, 0.3, 0.2, 0.1])),
            ],
            -0.5,
            UtilityModel::cara(1.0).unwrap(),
        )
        .unwrap();
        SpreadProblem::new(inst).unwrap()
    }

    #[test]
    fn payment_gap_examples() {
        let u = UtilityModel::cara(1.0).unwrap();
        assert_eq!(payment_gap(&u, 1.3, 0.0).unwrap(), 0.0);
        let m = (-1.0f64).exp() - (-2.0f64).exp();
        assert!((payment_gap(&u, 1.0, m).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(payment_gap(&u, 1.0, 1.0), Err(Error::RangeError(_))));
    }

    #[test]
    fn ordering_survives_reduction() {
        let sp = four();
        assert!(sp.ordering_holds().unwrap());
        assert!(sp.reduced_ordering_holds().unwrap());
    }

    #[test]
    fn iterative_matches_direct() {
        let sp = four();
        let rep = compare_with_direct(&sp, 1e-9).unwrap();
        assert!(rep.cost_delta <= 1e-8, "{rep:?}");
        assert!(rep.max_wage_delta <= 1e-6, "{rep:?}");
        assert!(rep.lambda_delta <= 1e-6 && rep.mu_delta <= 1e-6, "{rep:?}");
        assert!(rep.iterative.foc_residual <= 1e-8);
        let cost_parts = rep.iterative.inner.reduced_cost + rep.iterative.inner.spread_cost;
        assert!((cost_parts - rep.iterative.total_cost).abs() < 1e-12);
    }

    #[test]
    fn envelope_matches_finite_differences() {
        let sp = four();
        let m = outer_minimize(&sp, 1e-9).unwrap().m_star;
        for probe in [m * 0.5, m, m * 1.5] {
            let e = 1e-4;
            let s = inner_cost(&sp, probe).unwrap();
            let up = inner_cost(&sp, probe + e).unwrap().total;
            let dn = inner_cost(&sp, probe - e).unwrap().total;
            assert!(((up - dn) / (2.0 * e) - s.derivative).abs() < 1e-5);
            assert!(s.constraint_derivative < 0.0);
        }
    }

    #[test]
    fn degenerate_top_state() {
        let inst = ProblemInstance::new(
            vec![1.0, 2.0, 3.0, 4.0],
            vec![
                ActionSpec::new("H", 0.1, d(&[0.3, 0.3, 0.4, 0.0]), d(&[0.2, 0.3, 0.5, 0.0])),
                ActionSpec::homogeneous("L", 0.0, d(&[0.5, 0.3, 0.2, 0.0])),
            ],
            -0.5,
            UtilityModel::cara(1.0).unwrap(),
        )
        .unwrap();
        let sp = SpreadProblem::new(inst).unwrap();
        assert!(sp.is_degenerate());
        let out = outer_minimize(&sp, 1e-9).unwrap();
        assert_eq!(out.m_star, 0.0);
        let three = solve_second_best(sp.reduced(), "H", 1e-9).unwrap();
        for k in 0..3 {
            assert!((out.wages[k] - three.wages[k]).abs() < 1e-9);
        }
    }
}
