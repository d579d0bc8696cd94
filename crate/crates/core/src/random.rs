//! Seeded generators for random instances, used by the examples and the
//! property tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::belief::Distribution;
use crate::cara::CaraSystem;
use crate::error::Result;
use crate::instance::{ActionSpec, ProblemInstance};
use crate::utility::UtilityModel;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random distribution with every probability at least `floor / states`
/// before normalisation.
pub fn distribution<R: Rng>(rng: &mut R, states: usize, floor: f64) -> Distribution {
    let w: Vec<f64> = (0..states).map(|_| rng.gen_range(floor..1.0)).collect();
    Distribution::from_weights(&w).expect("positive weights")
}

/// A pair `(high, low)` with `high` strictly MLRP-dominating `low`.
pub fn mlrp_pair<R: Rng>(rng: &mut R, states: usize) -> (Distribution, Distribution) {
    let low = distribution(rng, states, 0.1);
    let high = tilt_up(rng, &low, 0.05, 1.0);
    (high, low)
}

/// Multiplies `base` by a strictly increasing likelihood ratio with
/// per-step growth in `[lo, hi)` and renormalises.
pub fn tilt_up<R: Rng>(rng: &mut R, base: &Distribution, lo: f64, hi: f64) -> Distribution {
    let mut ratio = 1.0;
    let w: Vec<f64> = base
        .probs()
        .iter()
        .enumerate()
        .map(|(s, p)| {
            if s > 0 {
                ratio *= 1.0 + rng.gen_range(lo..hi);
            }
            p * ratio
        })
        .collect();
    Distribution::from_weights(&w).expect("positive weights")
}

pub fn utility<R: Rng>(rng: &mut R) -> UtilityModel {
    match rng.gen_range(0..4) {
        0 => UtilityModel::log(),
        1 => UtilityModel::sqrt(),
        2 => {
            let g = if rng.gen_bool(0.5) { rng.gen_range(0.3..0.9) } else { rng.gen_range(1.2..3.0) };
            UtilityModel::crra(g).expect("valid gamma")
        }
        _ => UtilityModel::cara(rng.gen_range(0.3..2.0)).expect("valid r"),
    }
}

/// Reservation utility and action cost picked through wages so that both
/// `ubar` and `ubar + cost` are interior for any family.
pub fn levels<R: Rng>(rng: &mut R, u: &UtilityModel) -> (f64, f64) {
    let w0 = rng.gen_range(0.5..2.0);
    let w1 = w0 + rng.gen_range(0.1..1.0);
    let v0 = u.evaluate(w0).expect("wage in domain");
    (v0, u.evaluate(w1).expect("wage in domain") - v0)
}

fn outputs(states: usize) -> Vec<f64> {
    (1..=states).map(|s| s as f64).collect()
}

/// One action, principal and agent sharing beliefs.
pub fn homogeneous_instance<R: Rng>(rng: &mut R, states: usize, u: UtilityModel) -> Result<ProblemInstance> {
    let (ubar, cost) = levels(rng, &u);
    let p = distribution(rng, states, 0.05);
    ProblemInstance::new(outputs(states), vec![ActionSpec::homogeneous("a", cost, p)], ubar, u)
}

/// One action with independent principal and agent beliefs.
pub fn heterogeneous_instance<R: Rng>(rng: &mut R, states: usize, u: UtilityModel) -> Result<ProblemInstance> {
    let (ubar, cost) = levels(rng, &u);
    loop {
        let p = distribution(rng, states, 0.05);
        let a = distribution(rng, states, 0.05);
        let gap = p.probs().iter().zip(a.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if gap > 1e-3 {
            return ProblemInstance::new(outputs(states), vec![ActionSpec::new("a", cost, p, a)], ubar, u);
        }
    }
}

/// Two actions `H` (costly) and `L` (free) with agent beliefs ordered by
/// MLRP and independent principal beliefs for `H`.
pub fn two_action_instance<R: Rng>(rng: &mut R, states: usize, u: UtilityModel) -> Result<ProblemInstance> {
    let (lo, hi) = u.range();
    let bounded = lo.is_finite() || hi.is_finite();
    let (ubar, cost, ah, al) = loop {
        let (ubar, cost) = levels(rng, &u);
        let (ah, al) = mlrp_pair(rng, states);
        if !bounded || incentive_cap(&ah, &al, ubar + cost) > 1.2 * cost {
            break (ubar, cost, ah, al);
        }
    };
    let ph = distribution(rng, states, 0.05);
    let pl = distribution(rng, states, 0.05);
    ProblemInstance::new(
        outputs(states),
        vec![ActionSpec::new("H", cost, ph, ah), ActionSpec::new("L", 0.0, pl, al)],
        ubar,
        u,
    )
}

/// Largest `(pi_H - pi_L) . v` reachable with `pi_H . v = target` when
/// utility is bounded on the side `target` lies towards (0 for CARA and
/// for the bounded CRRA branches).
fn incentive_cap(high: &Distribution, low: &Distribution, target: f64) -> f64 {
    high.probs()
        .iter()
        .zip(low.probs())
        .map(|(h, l)| target * (1.0 - l / h))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Three-state CARA system (r = 1) satisfying the closed-form sign
/// conditions, found by rejection.
///
/// Utility is bounded above by 0, so incentives can only be bought up to
/// `|ubar + c| (max_s pi_L/pi_H - 1)`. Draws whose cost is not comfortably
/// below that bound (a factor of 1.2) are rejected as well.
pub fn cara_system<R: Rng>(rng: &mut R) -> CaraSystem {
    loop {
        let (pi_h, pi_l) = mlrp_pair(rng, 3);
        let delta_p = distribution(rng, 3, 0.05);
        let ubar = -(-rng.gen_range(0.0..2.0f64)).exp();
        let cost = rng.gen_range(0.05..0.6) * ubar.abs();
        if incentive_cap(&pi_h, &pi_l, ubar + cost) <= 1.2 * cost {
            continue;
        }
        if let Ok(sys) = CaraSystem::new(pi_h, pi_l, delta_p, cost, ubar) {
            return sys;
        }
    }
}

/// Four-state, two-action CARA instance with agent-H over principal-H
/// over agent-L in the likelihood-ratio order.
pub fn spread_instance<R: Rng>(rng: &mut R) -> Result<ProblemInstance> {
    let (low, principal, agent, ubar, cost) = loop {
        let low = distribution(rng, 4, 0.2);
        let principal = tilt_up(rng, &low, 0.05, 0.6);
        let agent = tilt_up(rng, &principal, 0.05, 0.6);
        let ubar = -(-rng.gen_range(0.0..1.5f64)).exp();
        let cost = rng.gen_range(0.05..0.4) * ubar.abs();
        if incentive_cap(&agent, &low, ubar + cost) > 1.2 * cost {
            break (low, principal, agent, ubar, cost);
        }
    };
    ProblemInstance::new(
        outputs(4),
        vec![ActionSpec::new("H", cost, principal, agent), ActionSpec::homogeneous("L", 0.0, low)],
        ubar,
        UtilityModel::cara(1.0)?,
    )
}
