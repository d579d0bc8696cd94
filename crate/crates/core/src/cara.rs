//! Closed-form second-best contract for exponential utility with two
//! actions and three states.
//!
//! With `u(w) = -e^{-w}` the FOC, IR and IC are linear in the marginal
//! utilities `e^{-w_s}`. Eliminating one state at a time from IR and IC
//! expresses `w_1` and `w_2` as functions of `w_0`, and one remaining FOC
//! becomes a scalar equation in `w_0` whose right-hand side is increasing
//! in `e^{w_0}`. States are 0-based here: the lowest output is state 0.
//!
//! Costs enter only through the gap `c = c(H) - c(L)`, i.e. `c(L)` is
//! normalised to zero. A risk-aversion coefficient `r` other than 1 is
//! handled by measuring money in units of `1/r`.

use serde::Serialize;

use crate::belief::{mlrp_strictly_dominates, Distribution};
use crate::error::{Error, Result};
use crate::instance::{ActionSpec, ProblemInstance};
use crate::shape::{classify, power, Monotonicity};
use crate::utility::{UtilityFamily, UtilityModel};

/// Weak-monotonicity slack and strict-step threshold for sweep verdicts.
pub const SWEEP_TOL: f64 = 1e-9;
pub const STRICT_STEP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaraSystem {
    /// Agent's beliefs under the high action.
    pub pi_h: Distribution,
    /// Agent's beliefs under the low action.
    pub pi_l: Distribution,
    /// Principal's beliefs under the high action.
    pub delta_p: Distribution,
    /// Cost gap `c(H) - c(L)`, in utils.
    pub cost: f64,
    /// Reservation utility, negative.
    pub ubar: f64,
    pub risk_aversion: f64,
    delta: [f64; 3],
    kappa21: f64,
    kappa31: f64,
    kappa32: f64,
    gamma2: f64,
}

/// Which constraints bind at the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaraRegime {
    BothBinding,
    FirstBest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaraSolution {
    pub wages: [f64; 3],
    pub lambda: f64,
    pub mu: f64,
    pub regime: CaraRegime,
}

/// Residuals of the optimality system at a candidate contract.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaraResiduals {
    pub foc: [f64; 3],
    pub ir: f64,
    pub ic: f64,
}

impl CaraResiduals {
    pub fn max_abs(&self) -> f64 {
        self.foc
            .iter()
            .chain([&self.ir, &self.ic])
            .fold(0.0, |a, x| a.max(x.abs()))
    }
}

impl CaraSystem {
    pub fn new(pi_h: Distribution, pi_l: Distribution, delta_p: Distribution, cost: f64, ubar: f64) -> Result<Self> {
        for (name, d) in [("pi_h", &pi_h), ("pi_l", &pi_l), ("delta_p", &delta_p)] {
            if d.len() != 3 {
                return Err(Error::DimensionError(format!("{name} has {} states, need 3", d.len())));
            }
            if !d.is_solver_positive() {
                return Err(Error::InvalidDistribution(format!("{name} must be strictly positive")));
            }
        }
        if !(cost >= 0.0) || !cost.is_finite() {
            return Err(Error::Validation {
                path: "cost".into(),
                message: format!("cost gap must be finite and non-negative, got {cost}"),
            });
        }
        if !(ubar + cost < 0.0) || !ubar.is_finite() {
            return Err(Error::Validation {
                path: "ubar".into(),
                message: format!("ubar + c must be negative for exponential utility, got {}", ubar + cost),
            });
        }
        if !mlrp_strictly_dominates(&pi_h, &pi_l)? {
            return Err(Error::Validation {
                path: "pi_h".into(),
                message: "high-action beliefs must strictly MLRP-dominate low-action beliefs".into(),
            });
        }
        let h = pi_h.probs();
        let l = pi_l.probs();
        let delta = [h[0] - l[0], h[1] - l[1], h[2] - l[2]];
        let kappa = |hi: usize, lo: usize| delta[hi] * h[lo] - delta[lo] * h[hi];
        let (kappa21, kappa31, kappa32) = (kappa(1, 0), kappa(2, 0), kappa(2, 1));
        let gamma2 = -kappa21 / delta[0];
        let sys = CaraSystem {
            pi_h,
            pi_l,
            delta_p,
            cost,
            ubar,
            risk_aversion: 1.0,
            delta,
            kappa21,
            kappa31,
            kappa32,
            gamma2,
        };
        if !(delta[0] < 0.0 && delta[2] > 0.0)
            || !(kappa21 > 0.0 && kappa31 > 0.0 && kappa32 > 0.0)
            || !(gamma2 > 0.0 && gamma2 < 1.0)
            || !(sys.gamma2_shift() > 0.0)
        {
            return Err(Error::Validation {
                path: "pi_h".into(),
                message: "belief pair violates the sign conditions of the closed form".into(),
            });
        }
        Ok(sys)
    }

    pub fn with_risk_aversion(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::DomainError(format!("risk aversion must be positive, got {r}")));
        }
        self.risk_aversion = r;
        Ok(self)
    }

    /// Reads a two-action, three-state exponential-utility instance. The
    /// costlier action is the target.
    pub fn from_instance(inst: &ProblemInstance) -> Result<Self> {
        let UtilityFamily::Cara { r } = inst.utility().family() else {
            return Err(Error::Validation {
                path: "utility".into(),
                message: "closed form needs exponential utility".into(),
            });
        };
        if inst.states() != 3 || inst.actions().len() != 2 {
            return Err(Error::DimensionError(format!(
                "closed form needs 3 states and 2 actions, got {} and {}",
                inst.states(),
                inst.actions().len()
            )));
        }
        let hi = inst.action(inst.costliest_action())?;
        let lo = inst.actions().iter().find(|a| a.name != hi.name).expect("two actions");
        Self::new(
            hi.agent_beliefs.clone(),
            lo.agent_beliefs.clone(),
            hi.principal_beliefs.clone(),
            hi.cost - lo.cost,
            inst.reservation_utility() + lo.cost,
        )?
        .with_risk_aversion(*r)
    }

    /// The same problem as a general instance with actions `H` and `L`.
    /// The principal's low-action beliefs are set to the agent's; they do
    /// not affect the contract.
    pub fn to_instance(&self, outputs: Vec<f64>) -> Result<ProblemInstance> {
        ProblemInstance::new(
            outputs,
            vec![
                ActionSpec::new("H", self.cost, self.delta_p.clone(), self.pi_h.clone()),
                ActionSpec::homogeneous("L", 0.0, self.pi_l.clone()),
            ],
            self.ubar,
            UtilityModel::cara(self.risk_aversion)?,
        )
    }

    pub fn delta(&self) -> [f64; 3] {
        self.delta
    }

    /// `kappa_{hi,lo}` for the 0-based pairs `(1,0)`, `(2,0)`, `(2,1)`.
    pub fn kappas(&self) -> (f64, f64, f64) {
        (self.kappa21, self.kappa31, self.kappa32)
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    /// `gamma_2 + Delta_1 / Delta_0`, positive under the MLRP ordering.
    pub fn gamma2_shift(&self) -> f64 {
        self.gamma2 + self.delta[1] / self.delta[0]
    }

    /// `-Delta_2 ubar + c pi_2(L)`, the right-hand side after eliminating
    /// state 2.
    fn k_top(&self) -> f64 {
        -self.delta[2] * self.ubar + self.cost * self.pi_l.probs()[2]
    }

    /// `-Delta_1 ubar + c pi_1(L)`.
    fn k_mid(&self) -> f64 {
        -self.delta[1] * self.ubar + self.cost * self.pi_l.probs()[1]
    }

    fn r(&self) -> f64 {
        self.risk_aversion
    }

    /// Wage in state 1 implied by IR and IC given the state-0 wage.
    pub fn w2_from_w1(&self, w1: f64) -> Result<f64> {
        let x = (-self.r() * w1).exp();
        let denom = self.k_top() - self.kappa31 * x;
        if !(denom > 0.0) {
            return Err(Error::OutOfBranch { w1, which: "w2" });
        }
        Ok((self.kappa32 / denom).ln() / self.r())
    }

    /// Wage in state 2 implied by IR and IC given the state-0 wage.
    pub fn w3_from_w1(&self, w1: f64) -> Result<f64> {
        let x = (-self.r() * w1).exp();
        let denom = self.kappa21 * x - self.k_mid();
        if !(denom > 0.0) {
            return Err(Error::OutOfBranch { w1, which: "w3" });
        }
        Ok((self.kappa32 / denom).ln() / self.r())
    }

    /// Open interval of `x = e^{-r w_0}` on which both implied wages exist.
    pub fn branch(&self) -> (f64, f64) {
        ((self.k_mid() / self.kappa21).max(0.0), self.k_top() / self.kappa31)
    }

    /// RHS minus LHS of the remaining FOC as a function of `x = e^{-r w_0}`;
    /// strictly decreasing on the branch.
    fn star(&self, x: f64) -> f64 {
        let d = self.delta_p.probs();
        let e_w1 = 1.0 / x;
        let e_w3 = self.kappa32 / (self.kappa21 * x - self.k_mid());
        let e_neg_w2 = (self.k_top() - self.kappa31 * x) / self.kappa32;
        (d[0] * e_w1 * self.gamma2_shift() + d[2] * self.gamma2 * e_w3) * e_neg_w2 - d[1] * (1.0 - self.gamma2)
    }

    /// Root of the scalar equation for the state-0 wage, by bisection in
    /// `ln x` on the branch interval.
    pub fn solve_w1(&self, tol: f64) -> Result<f64> {
        let (lo_x, hi_x) = self.branch();
        if !(hi_x > lo_x) {
            return Err(Error::NoRootInBranch(format!(
                "branch interval ({lo_x:.6e}, {hi_x:.6e}) is empty"
            )));
        }
        let hi_t = hi_x.ln();
        // star -> -LHS < 0 at the top of the branch, +inf at the bottom.
        let mut lo_t = if lo_x > 0.0 { lo_x.ln() } else { hi_t - 1.0 };
        if lo_x <= 0.0 {
            let mut step = 1.0;
            while self.star(lo_t.exp()) <= 0.0 {
                step *= 2.0;
                lo_t = hi_t - step;
                if step > 1e4 || lo_t.exp() == 0.0 {
                    return Err(Error::NoRootInBranch("no sign change below the branch top".into()));
                }
            }
        }
        let tol = tol.max(1e-15) * self.r();
        let (mut a, mut b) = (lo_t, hi_t);
        for _ in 0..400 {
            if b - a <= tol * (1.0 + a.abs().max(b.abs())) {
                break;
            }
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let f = self.star(m.exp());
            if f.is_nan() {
                return Err(Error::NoRootInBranch("equation undefined inside the branch".into()));
            }
            if f > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(-0.5 * (a + b) / self.r())
    }

    /// IR multiplier from the summed FOC and IC multiplier from the state-0
    /// FOC, both in the `r = 1` units of the derivation.
    pub fn multipliers(&self, wages: [f64; 3], tol: f64) -> Result<(f64, f64)> {
        let d = self.delta_p.probs();
        let h = self.pi_h.probs();
        let e: Vec<f64> = wages.iter().map(|w| (self.r() * w).exp()).collect();
        let lambda: f64 = (0..3).map(|s| d[s] * e[s]).sum();
        let mu = (d[0] * e[0] - lambda * h[0]) / self.delta[0];
        if mu < -tol {
            return Err(Error::NegativeMu { mu });
        }
        Ok((lambda, mu))
    }

    /// FOC, IR and IC residuals of a contract with given multipliers.
    pub fn residuals(&self, wages: [f64; 3], lambda: f64, mu: f64) -> CaraResiduals {
        let d = self.delta_p.probs();
        let h = self.pi_h.probs();
        let a: Vec<f64> = wages.iter().map(|w| (-self.r() * w).exp()).collect();
        let foc = [0, 1, 2].map(|s| d[s] - (lambda * h[s] + mu * self.delta[s]) * a[s]);
        let ir = (0..3).map(|s| -h[s] * a[s]).sum::<f64>() - (self.ubar + self.cost);
        let ic = (0..3).map(|s| -self.delta[s] * a[s]).sum::<f64>() - self.cost;
        CaraResiduals { foc, ir, ic }
    }

    /// Full-information wages: `e^{-r w_s} = -(delta_s / pi_s)(ubar + c)`.
    pub fn first_best(&self) -> [f64; 3] {
        let d = self.delta_p.probs();
        let h = self.pi_h.probs();
        [0, 1, 2].map(|s| -(-(d[s] / h[s]) * (self.ubar + self.cost)).ln() / self.r())
    }

    /// IC slack of a contract, in utils.
    pub fn ic_slack(&self, wages: [f64; 3]) -> f64 {
        self.residuals(wages, 0.0, 0.0).ic
    }

    /// Optimal contract: the both-binding closed form, or the first best
    /// when incentives come for free (negative IC multiplier or no root on
    /// the branch, with the first best incentive compatible).
    pub fn solve(&self, tol: f64) -> Result<CaraSolution> {
        let closed = self.solve_w1(tol).and_then(|w1| {
            let wages = [w1, self.w2_from_w1(w1)?, self.w3_from_w1(w1)?];
            let (lambda, mu) = self.multipliers(wages, 1e-9)?;
            Ok(CaraSolution {
                wages,
                lambda,
                mu,
                regime: CaraRegime::BothBinding,
            })
        });
        match closed {
            Ok(sol) => Ok(sol),
            Err(e @ (Error::NegativeMu { .. } | Error::NoRootInBranch(_))) => {
                let fb = self.first_best();
                if self.ic_slack(fb) < -1e-9 {
                    return Err(e);
                }
                let d = self.delta_p.probs();
                let lambda = (0..3).map(|s| d[s] * (self.r() * fb[s]).exp()).sum();
                Ok(CaraSolution {
                    wages: fb,
                    lambda,
                    mu: 0.0,
                    regime: CaraRegime::FirstBest,
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Copy with the principal's high-action beliefs shifted by `eps` onto
    /// state `s` from state `s_prime`.
    pub fn shifted(&self, s: usize, s_prime: usize, eps: f64) -> Result<Self> {
        let mut out = self.clone();
        out.delta_p = self.delta_p.shifted(s, s_prime, eps)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaraSweepRow {
    pub eps: f64,
    pub wages: [f64; 3],
    pub lambda: f64,
    pub mu: f64,
    pub regime: CaraRegime,
    /// Wage variance under the agent's high-action beliefs.
    pub power_agent: f64,
    /// Wage variance under the (perturbed) principal's beliefs.
    pub power_principal: f64,
    pub first_best: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaraSweep {
    pub s: usize,
    pub s_prime: usize,
    pub rows: Vec<CaraSweepRow>,
    /// `w_s` non-increasing and `w_{s'}` non-decreasing along the grid,
    /// each with a strict step when the grid has more than one value.
    pub verdict: bool,
    /// Shape of the remaining state's wage path; reported, not asserted.
    pub third_state: Option<(usize, Monotonicity)>,
    /// Shape of the same state's first-best wage path.
    pub third_state_first_best: Option<(usize, Monotonicity)>,
}

impl CaraSweep {
    pub const CSV_HEADER: [&'static str; 12] = [
        "eps",
        "w_0",
        "w_1",
        "w_2",
        "lambda",
        "mu",
        "power_agent",
        "power_principal",
        "regime",
        "fb_w_0",
        "fb_w_1",
        "fb_w_2",
    ];
}

/// Sweeps the closed form along `eps_grid` (ascending, non-negative) for
/// the shift of principal mass onto `s` from `s_prime`.
pub fn cara_compstat(sys: &CaraSystem, s: usize, s_prime: usize, eps_grid: &[f64]) -> Result<CaraSweep> {
    if s >= 3 || s_prime >= 3 {
        return Err(Error::IndexOutOfRange { index: s.max(s_prime), len: 3 });
    }
    if s == s_prime {
        return Err(Error::InvalidGrid("states s and s' must differ".into()));
    }
    let limit = sys.delta_p.probs()[s].min(sys.delta_p.probs()[s_prime]);
    for &eps in eps_grid {
        if !(eps >= 0.0) || eps >= limit {
            return Err(Error::EpsilonTooLarge { eps, limit });
        }
    }
    let rows: Vec<CaraSweepRow> = eps_grid
        .iter()
        .map(|&eps| {
            let p = sys.shifted(s, s_prime, eps)?;
            let sol = p.solve(1e-14)?;
            let w = sol.wages;
            Ok(CaraSweepRow {
                eps,
                wages: w,
                lambda: sol.lambda,
                mu: sol.mu,
                regime: sol.regime,
                power_agent: power(p.pi_h.probs(), &w),
                power_principal: power(p.delta_p.probs(), &w),
                first_best: p.first_best(),
            })
        })
        .collect::<Result<_>>()?;
    let path = |k: usize, fb: bool| -> Vec<f64> {
        rows.iter().map(|r| if fb { r.first_best[k] } else { r.wages[k] }).collect()
    };
    let down = path(s, false);
    let up = path(s_prime, false);
    let weakly = |p: &[f64], sign: f64| p.windows(2).all(|w| sign * (w[1] - w[0]) >= -SWEEP_TOL);
    let strict = |p: &[f64], sign: f64| p.windows(2).any(|w| sign * (w[1] - w[0]) > STRICT_STEP);
    let nontrivial = rows.len() > 1;
    let verdict = weakly(&down, -1.0)
        && weakly(&up, 1.0)
        && (!nontrivial || (strict(&down, -1.0) && strict(&up, 1.0)));
    let third = (0..3).find(|k| *k != s && *k != s_prime);
    Ok(CaraSweep {
        s,
        s_prime,
        third_state: third.map(|k| (k, classify(&path(k, false), STRICT_STEP))),
        third_state_first_best: third.map(|k| (k, classify(&path(k, true), STRICT_STEP))),
        rows,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::second_best::solve_second_best;

    fn d(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    fn sys() -> CaraSystem {
        CaraSystem::new(d(&[0.2, 0.3, 0.5]), d(&[0.5, 0.3, 0.2]), d(&[0.3, 0.3, 0.4]), 0.1, -0.5).unwrap()
    }

    /// Solves IR, IC and the state-0 FOC as a linear system in
    /// `(a_0, a_1, a_2) = e^{-w}` given `w_0`: an independent route to the
    /// implied wages.
    fn linear_route(s: &CaraSystem, w1: f64) -> [f64; 3] {
        let h = s.pi_h.probs();
        let dl = s.delta();
        let a0 = (-w1).exp();
        // h1 a1 + h2 a2 = -(ubar + c) - h0 a0 ; dl1 a1 + dl2 a2 = -c - dl0 a0
        let r1 = -(s.ubar + s.cost) - h[0] * a0;
        let r2 = -s.cost - dl[0] * a0;
        let det = h[1] * dl[2] - h[2] * dl[1];
        let a1 = (r1 * dl[2] - h[2] * r2) / det;
        let a2 = (h[1] * r2 - r1 * dl[1]) / det;
        [w1, -a1.ln(), -a2.ln()]
    }

    #[test]
    fn implied_wages_match_linear_solve() {
        let s = sys();
        let w1 = s.solve_w1(1e-14).unwrap();
        let lin = linear_route(&s, w1);
        assert!((s.w2_from_w1(w1).unwrap() - lin[1]).abs() < 1e-10);
        assert!((s.w3_from_w1(w1).unwrap() - lin[2]).abs() < 1e-10);
    }

    #[test]
    fn limits_and_branch_edges() {
        let s = sys();
        let limit = (s.kappas().2 / s.k_top()).ln();
        assert!((s.w2_from_w1(60.0).unwrap() - limit).abs() < 1e-12);
        let (lo, hi) = s.branch();
        let w_at_hi = -hi.ln();
        assert!(matches!(s.w2_from_w1(w_at_hi), Err(Error::OutOfBranch { .. })));
        if lo > 0.0 {
            assert!(matches!(s.w3_from_w1(-lo.ln()), Err(Error::OutOfBranch { .. })));
        }
    }

    #[test]
    fn sign_conditions() {
        let s = sys();
        let (k21, k31, k32) = s.kappas();
        assert!(k21 > 0.0 && k31 > 0.0 && k32 > 0.0);
        assert!(s.gamma2() > 0.0 && s.gamma2() < 1.0);
        assert!(s.gamma2_shift() > 0.0);
        // gamma2 <= pi_1(H) exactly when Delta_1 <= 0.
        let t = CaraSystem::new(d(&[0.1, 0.5, 0.4]), d(&[0.5, 0.3, 0.2]), d(&[0.3, 0.3, 0.4]), 0.1, -0.5).unwrap();
        assert!(t.delta()[1] > 0.0);
        assert!(t.gamma2() > t.pi_h.probs()[1]);
    }

    #[test]
    fn solution_satisfies_optimality_system() {
        let s = sys();
        let sol = s.solve(1e-14).unwrap();
        assert_eq!(sol.regime, CaraRegime::BothBinding);
        assert!(sol.lambda > 0.0 && sol.mu >= 0.0);
        let res = s.residuals(sol.wages, sol.lambda, sol.mu);
        assert!(res.max_abs() <= 1e-8, "{res:?}");
        let off = [sol.wages[0] + 0.01, sol.wages[1], sol.wages[2]];
        assert!(s.residuals(off, sol.lambda, sol.mu).max_abs() > 1e-6);
    }

    #[test]
    fn matches_numeric_solver() {
        let s = sys();
        let sol = s.solve(1e-14).unwrap();
        let inst = s.to_instance(vec![1.0, 2.0, 3.0]).unwrap();
        let num = solve_second_best(&inst, "H", 1e-9).unwrap();
        for k in 0..3 {
            assert!((sol.wages[k] - num.wages[k]).abs() < 1e-6);
        }
        assert!((sol.mu - num.mu[0]).abs() < 1e-6 * (1.0 + sol.mu));
    }

    #[test]
    fn equal_wages_give_zero_mu_with_homogeneous_beliefs() {
        let s = CaraSystem::new(d(&[0.2, 0.3, 0.5]), d(&[0.5, 0.3, 0.2]), d(&[0.2, 0.3, 0.5]), 0.1, -0.5).unwrap();
        let (lambda, mu) = s.multipliers([1.3; 3], 1e-9).unwrap();
        assert!((lambda - 1.3f64.exp()).abs() < 1e-12);
        assert!(mu.abs() < 1e-12);
    }

    #[test]
    fn risk_aversion_rescales_money() {
        let base = sys().solve(1e-14).unwrap();
        let r2 = sys().with_risk_aversion(2.0).unwrap();
        let sol = r2.solve(1e-14).unwrap();
        for k in 0..3 {
            assert!((sol.wages[k] - base.wages[k] / 2.0).abs() < 1e-10);
        }
        let num = solve_second_best(&r2.to_instance(vec![1.0, 2.0, 3.0]).unwrap(), "H", 1e-9).unwrap();
        for k in 0..3 {
            assert!((sol.wages[k] - num.wages[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn optimistic_principal_falls_back_to_first_best() {
        let s = CaraSystem::new(d(&[0.2, 0.3, 0.5]), d(&[0.5, 0.3, 0.2]), d(&[0.9, 0.06, 0.04]), 0.1, -0.5).unwrap();
        let sol = s.solve(1e-14).unwrap();
        assert_eq!(sol.regime, CaraRegime::FirstBest);
        assert_eq!(sol.wages, s.first_best());
        assert!(s.ic_slack(sol.wages) >= -1e-9);
    }

    #[test]
    fn sweep_directions() {
        let s = sys();
        let grid: Vec<f64> = (0..6).map(|i| 0.01 * i as f64).collect();
        let sw = cara_compstat(&s, 1, 2, &grid).unwrap();
        assert!(sw.verdict);
        assert_eq!(sw.rows[0].wages, s.solve(1e-14).unwrap().wages);
        assert_eq!(sw.third_state, Some((0, Monotonicity::Increasing)));
        assert_eq!(sw.third_state_first_best, Some((0, Monotonicity::Flat)));
        assert!(matches!(cara_compstat(&s, 1, 2, &[0.5]), Err(Error::EpsilonTooLarge { .. })));
    }
}
