//! Shape classification of wage schedules and paths.

use serde::{Deserialize, Serialize};

/// Adjacent-difference tolerance separating `Flat` from a strict direction
/// for wage schedules.
pub const WAGE_SHAPE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Flat,
    NonMonotone,
}

impl Monotonicity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Monotonicity::Increasing => "increasing",
            Monotonicity::Decreasing => "decreasing",
            Monotonicity::Flat => "flat",
            Monotonicity::NonMonotone => "non-monotone",
        }
    }

    /// Weakly increasing (`Increasing` or `Flat`).
    pub fn is_weakly_increasing(&self) -> bool {
        matches!(self, Monotonicity::Increasing | Monotonicity::Flat)
    }

    pub fn is_weakly_decreasing(&self) -> bool {
        matches!(self, Monotonicity::Decreasing | Monotonicity::Flat)
    }
}

/// Classifies a sequence by the signs of its adjacent differences, treating
/// differences within `tol` as zero.
pub fn classify(values: &[f64], tol: f64) -> Monotonicity {
    let mut up = false;
    let mut down = false;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d > tol {
            up = true;
        } else if d < -tol {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Monotonicity::Flat,
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (true, true) => Monotonicity::NonMonotone,
    }
}

/// Expected value of `values` under `probs`.
pub fn mean(probs: &[f64], values: &[f64]) -> f64 {
    probs.iter().zip(values).map(|(p, x)| p * x).sum()
}

/// Wage variance under `probs`; the "power" of an incentive scheme.
pub fn power(probs: &[f64], wages: &[f64]) -> f64 {
    let m = mean(probs, wages);
    probs
        .iter()
        .zip(wages)
        .map(|(p, w)| p * (w - m) * (w - m))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_basic() {
        assert_eq!(classify(&[1.0, 1.0, 1.0], 1e-8), Monotonicity::Flat);
        assert_eq!(classify(&[1.0, 2.0, 2.0], 1e-8), Monotonicity::Increasing);
        assert_eq!(classify(&[3.0, 2.0, 1.0], 1e-8), Monotonicity::Decreasing);
        assert_eq!(classify(&[1.0, 3.0, 2.0], 1e-8), Monotonicity::NonMonotone);
        assert_eq!(classify(&[1.0, 1.0 + 1e-10], 1e-8), Monotonicity::Flat);
        assert_eq!(classify(&[4.2], 1e-8), Monotonicity::Flat);
    }

    #[test]
    fn power_ignores_level_shift() {
        let p = [0.2, 0.3, 0.5];
        let w = [1.0, 2.5, 4.0];
        let shifted: Vec<f64> = w.iter().map(|x| x + 17.0).collect();
        assert!((power(&p, &w) - power(&p, &shifted)).abs() < 1e-12);
        assert_eq!(power(&p, &[2.0, 2.0, 2.0]), 0.0);
    }
}
