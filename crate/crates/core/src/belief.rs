//! Probability vectors over the finite output space, the monotone likelihood
//! ratio order between them, and the lumping reduction used by the
//! four-outcome decomposition.
//!
//! States are indexed from 0 in this crate, so the lowest output is state 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum-to-one tolerance applied when validating inputs.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Cross-product slack used by the MLRP predicates. Probabilities are at most
/// one, so products carry absolute rounding of order 1e-16.
pub const MLRP_TOL: f64 = 1e-15;

/// Minimum belief entry the solvers accept; first-order conditions divide by
/// probabilities.
pub const MIN_SOLVER_PROB: f64 = 1e-9;

/// A point of the probability simplex over `S >= 2` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 states, got {}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}; probabilities must be finite and non-negative"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Distribution { probs })
    }

    /// Builds a distribution from non-negative weights by normalising them.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(
                "weights must have a positive finite sum".into(),
            ));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(states: usize) -> Result<Self> {
        Self::from_weights(&vec![1.0; states])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True when every entry is at least [`MIN_SOLVER_PROB`].
    pub fn is_solver_positive(&self) -> bool {
        self.min_prob() >= MIN_SOLVER_PROB
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values).map(|(p, x)| p * x).sum()
    }

    pub fn variance(&self, values: &[f64]) -> f64 {
        let mean = self.expectation(values);
        self.probs
            .iter()
            .zip(values)
            .map(|(p, x)| p * (x - mean) * (x - mean))
            .sum()
    }

    /// Moves `eps` of mass onto state `gain` from state `lose`.
    ///
    /// The result must stay in the open simplex: `eps < probs[lose]`.
    /// Negative `eps` moves mass the other way.
    pub fn shifted(&self, gain: usize, lose: usize, eps: f64) -> Result<Self> {
        let n = self.len();
        for idx in [gain, lose] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
        }
        if gain == lose {
            return Err(Error::Validation {
                path: "states".into(),
                message: "perturbed states must differ".into(),
            });
        }
        let limit = if eps >= 0.0 {
            self.probs[lose]
        } else {
            self.probs[gain]
        };
        if eps.abs() >= limit {
            return Err(Error::EpsilonTooLarge { eps, limit });
        }
        let mut probs = self.probs.clone();
        probs[gain] += eps;
        probs[lose] -= eps;
        Ok(Distribution { probs })
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Distribution::new(value)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

/// Outcome of comparing two distributions in the MLRP order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MlrpOrder {
    FDominatesG,
    GDominatesF,
    Equal,
    Incomparable,
}

fn check_len(f: &Distribution, g: &Distribution) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            found: g.len(),
        });
    }
    Ok(())
}

/// Weak dominance of `f` over `g`: `f_s g_t >= f_t g_s` for all `s > t`.
/// Division-free, so zero entries are legal.
fn dominates(f: &[f64], g: &[f64]) -> bool {
    let n = f.len();
    (0..n).all(|hi| (0..hi).all(|lo| f[hi] * g[lo] >= f[lo] * g[hi] - MLRP_TOL))
}

fn strictly_somewhere(f: &[f64], g: &[f64]) -> bool {
    let n = f.len();
    (0..n).any(|hi| (0..hi).any(|lo| f[hi] * g[lo] > f[lo] * g[hi] + MLRP_TOL))
}

pub fn mlrp_compare(f: &Distribution, g: &Distribution) -> Result<MlrpOrder> {
    check_len(f, g)?;
    let fg = dominates(f.probs(), g.probs());
    let gf = dominates(g.probs(), f.probs());
    Ok(match (fg, gf) {
        (true, true) => MlrpOrder::Equal,
        (true, false) => MlrpOrder::FDominatesG,
        (false, true) => MlrpOrder::GDominatesF,
        (false, false) => MlrpOrder::Incomparable,
    })
}

/// `f` weakly MLRP-dominates `g` (includes the `Equal` case).
pub fn mlrp_dominates(f: &Distribution, g: &Distribution) -> Result<bool> {
    check_len(f, g)?;
    Ok(dominates(f.probs(), g.probs()))
}

/// `f` weakly dominates `g` and at least one cross-product is strict.
pub fn mlrp_strictly_dominates(f: &Distribution, g: &Distribution) -> Result<bool> {
    check_len(f, g)?;
    Ok(dominates(f.probs(), g.probs()) && strictly_somewhere(f.probs(), g.probs()))
}

/// First-order stochastic dominance via cumulative sums: `F(s) <= G(s)`.
pub fn first_order_dominates(f: &Distribution, g: &Distribution) -> Result<bool> {
    check_len(f, g)?;
    let mut cf = 0.0;
    let mut cg = 0.0;
    for (a, b) in f.probs().iter().zip(g.probs()) {
        cf += a;
        cg += b;
        if cf > cg + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lumps states `keep-1 ..` together: `(p_0, ..., p_{k-2}, sum_{s >= k-1} p_s)`.
pub fn reduce_distribution(p: &Distribution, keep: usize) -> Result<Distribution> {
    if keep < 2 || keep > p.len() {
        return Err(Error::InvalidReduction {
            keep,
            len: p.len(),
        });
    }
    let mut probs: Vec<f64> = p.probs()[..keep - 1].to_vec();
    probs.push(p.probs()[keep - 1..].iter().sum());
    Ok(Distribution { probs })
}

/// Componentwise difference of the agent's beliefs under two actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaVector {
    values: Vec<f64>,
}

impl DeltaVector {
    pub fn between(high: &Distribution, low: &Distribution) -> Result<Self> {
        check_len(high, low)?;
        Ok(DeltaVector {
            values: high
                .probs()
                .iter()
                .zip(low.probs())
                .map(|(h, l)| h - l)
                .collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `kappa_{hi,lo} = Delta_hi * pi_lo(H) - Delta_lo * pi_hi(H)`.
///
/// Strictly positive whenever the agent's beliefs are strictly MLRP-ordered
/// across the two actions and `s_hi > s_lo`.
pub fn kappa(d: &DeltaVector, agent_high: &Distribution, s_hi: usize, s_lo: usize) -> Result<f64> {
    if d.len() != agent_high.len() {
        return Err(Error::LengthMismatch {
            expected: agent_high.len(),
            found: d.len(),
        });
    }
    if s_hi >= d.len() {
        return Err(Error::IndexOutOfRange {
            index: s_hi,
            len: d.len(),
        });
    }
    if s_hi <= s_lo {
        return Err(Error::IndexOrder { s_hi, s_lo });
    }
    let dv = d.values();
    let p = agent_high.probs();
    Ok(dv[s_hi] * p[s_lo] - dv[s_lo] * p[s_hi])
}
