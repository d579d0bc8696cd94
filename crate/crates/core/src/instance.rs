//! Contracting problem data: outputs, actions with belief pairs, the
//! reservation utility and the agent's utility model.

use crate::belief::Distribution;
use crate::error::{Error, Result};
use crate::utility::UtilityModel;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub name: String,
    /// Disutility of the action, in utils.
    pub cost: f64,
    pub principal_beliefs: Distribution,
    pub agent_beliefs: Distribution,
}

impl ActionSpec {
    pub fn new(
        name: impl Into<String>,
        cost: f64,
        principal_beliefs: Distribution,
        agent_beliefs: Distribution,
    ) -> Self {
        ActionSpec {
            name: name.into(),
            cost,
            principal_beliefs,
            agent_beliefs,
        }
    }

    /// Action whose principal and agent beliefs coincide.
    pub fn homogeneous(name: impl Into<String>, cost: f64, beliefs: Distribution) -> Self {
        Self::new(name, cost, beliefs.clone(), beliefs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    outputs: Vec<f64>,
    actions: Vec<ActionSpec>,
    reservation_utility: f64,
    utility: UtilityModel,
}

impl ProblemInstance {
    pub fn new(
        outputs: Vec<f64>,
        actions: Vec<ActionSpec>,
        reservation_utility: f64,
        utility: UtilityModel,
    ) -> Result<Self> {
        let s = outputs.len();
        if s < 2 {
            return Err(Error::Validation {
                path: "outputs".into(),
                message: format!("need at least 2 outputs, got {s}"),
            });
        }
        if outputs.iter().any(|y| !y.is_finite()) {
            return Err(Error::Validation {
                path: "outputs".into(),
                message: "outputs must be finite".into(),
            });
        }
        if let Some(i) = outputs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Validation {
                path: format!("outputs[{}]", i + 1),
                message: "outputs must be strictly increasing".into(),
            });
        }
        if actions.is_empty() {
            return Err(Error::Validation {
                path: "actions".into(),
                message: "need at least one action".into(),
            });
        }
        for (i, a) in actions.iter().enumerate() {
            for (field, d) in [
                ("principal_beliefs", &a.principal_beliefs),
                ("agent_beliefs", &a.agent_beliefs),
            ] {
                if d.len() != s {
                    return Err(Error::Validation {
                        path: format!("actions[{i}].{field}"),
                        message: format!(
                            "action '{}' has {} probabilities for {s} outputs",
                            a.name,
                            d.len()
                        ),
                    });
                }
            }
            if !a.cost.is_finite() {
                return Err(Error::Validation {
                    path: format!("actions[{i}].cost"),
                    message: "cost must be finite".into(),
                });
            }
            if actions[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Validation {
                    path: format!("actions[{i}].name"),
                    message: format!("duplicate action name '{}'", a.name),
                });
            }
        }
        if !reservation_utility.is_finite() {
            return Err(Error::Validation {
                path: "reservation_utility".into(),
                message: "reservation utility must be finite".into(),
            });
        }
        let (lo, hi) = utility.range();
        if !(reservation_utility > lo && reservation_utility < hi) {
            return Err(Error::Validation {
                path: "reservation_utility".into(),
                message: format!(
                    "{reservation_utility} is outside the range ({lo}, {hi}) of {} utility",
                    utility.family().name()
                ),
            });
        }
        Ok(ProblemInstance {
            outputs,
            actions,
            reservation_utility,
            utility,
        })
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn states(&self) -> usize {
        self.outputs.len()
    }

    pub fn actions(&self) -> &[ActionSpec] {
        &self.actions
    }

    pub fn reservation_utility(&self) -> f64 {
        self.reservation_utility
    }

    pub fn utility(&self) -> &UtilityModel {
        &self.utility
    }

    pub fn action_index(&self, name: &str) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    pub fn action(&self, name: &str) -> Result<&ActionSpec> {
        Ok(&self.actions[self.action_index(name)?])
    }

    /// Name of the most costly action; the usual implementation target.
    pub fn costliest_action(&self) -> &str {
        &self
            .actions
            .iter()
            .max_by(|a, b| a.cost.total_cmp(&b.cost))
            .expect("instance has at least one action")
            .name
    }

    /// Non-fatal diagnostics: tied action costs make incentive constraints
    /// degenerate but remain valid linear constraints.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            for b in &self.actions[i + 1..] {
                if a.cost == b.cost {
                    out.push(format!(
                        "actions '{}' and '{}' have equal cost {}; incentive constraints between them may be degenerate",
                        a.name, b.name, a.cost
                    ));
                }
            }
        }
        out
    }

    /// Copy of the instance with one action's beliefs replaced.
    pub fn with_action_beliefs(
        &self,
        action: usize,
        principal: Distribution,
        agent: Distribution,
    ) -> Result<Self> {
        let mut actions = self.actions.clone();
        actions[action].principal_beliefs = principal;
        actions[action].agent_beliefs = agent;
        Self::new(
            self.outputs.clone(),
            actions,
            self.reservation_utility,
            self.utility.clone(),
        )
    }

    pub fn with_outputs(&self, outputs: Vec<f64>) -> Result<Self> {
        Self::new(
            outputs,
            self.actions.clone(),
            self.reservation_utility,
            self.utility.clone(),
        )
    }

    /// Fails unless every belief vector of `action` is bounded away from zero.
    pub(crate) fn require_positive_beliefs(&self, action: usize) -> Result<()> {
        let a = &self.actions[action];
        for (field, d) in [
            ("principal_beliefs", &a.principal_beliefs),
            ("agent_beliefs", &a.agent_beliefs),
        ] {
            if !d.is_solver_positive() {
                return Err(Error::Validation {
                    path: format!("actions[{action}].{field}"),
                    message: format!(
                        "solvers need every probability >= {}; action '{}' has {}",
                        crate::belief::MIN_SOLVER_PROB,
                        a.name,
                        d.min_prob()
                    ),
                });
            }
        }
        Ok(())
    }
}
