//! Agent utility families with closed-form inverses and derivatives.
//!
//! Every solver works with five maps: `u`, `u'`, `(u')^-1`, the inverse
//! `h = u^-1` (wage needed to deliver a promised utility) and `h'`. The
//! parametric families below provide all of them exactly. A tabulated
//! model is available for experiments; it uses monotone cubic interpolation
//! and numeric inversion.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum UtilityFamily {
    /// `u(w) = -exp(-r w)`, `r > 0`.
    Cara { r: f64 },
    /// `u(w) = ln w`.
    Log,
    /// `u(w) = w^(1-gamma) / (1-gamma)`, `gamma > 0`, `gamma != 1`.
    Crra { gamma: f64 },
    /// `u(w) = sqrt(w)`.
    Sqrt,
    Tabulated(TabulatedUtility),
}

impl UtilityFamily {
    pub fn name(&self) -> &'static str {
        match self {
            UtilityFamily::Cara { .. } => "cara",
            UtilityFamily::Log => "log",
            UtilityFamily::Crra { .. } => "crra",
            UtilityFamily::Sqrt => "sqrt",
            UtilityFamily::Tabulated(_) => "tabulated",
        }
    }

    fn default_domain(&self) -> (f64, f64) {
        match self {
            UtilityFamily::Cara { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            UtilityFamily::Log | UtilityFamily::Crra { .. } | UtilityFamily::Sqrt => {
                (0.0, f64::INFINITY)
            }
            UtilityFamily::Tabulated(t) => (t.grid[0], *t.grid.last().unwrap()),
        }
    }

    fn u(&self, w: f64) -> f64 {
        match self {
            UtilityFamily::Cara { r } => -(-r * w).exp(),
            UtilityFamily::Log => w.ln(),
            UtilityFamily::Crra { gamma } => w.powf(1.0 - gamma) / (1.0 - gamma),
            UtilityFamily::Sqrt => w.sqrt(),
            UtilityFamily::Tabulated(t) => t.eval(w).0,
        }
    }

    fn du(&self, w: f64) -> f64 {
        match self {
            UtilityFamily::Cara { r } => r * (-r * w).exp(),
            UtilityFamily::Log => 1.0 / w,
            UtilityFamily::Crra { gamma } => w.powf(-gamma),
            UtilityFamily::Sqrt => 0.5 / w.sqrt(),
            UtilityFamily::Tabulated(t) => t.eval(w).1,
        }
    }

    fn d2u(&self, w: f64) -> f64 {
        match self {
            UtilityFamily::Cara { r } => -r * r * (-r * w).exp(),
            UtilityFamily::Log => -1.0 / (w * w),
            UtilityFamily::Crra { gamma } => -gamma * w.powf(-gamma - 1.0),
            UtilityFamily::Sqrt => -0.25 * w.powf(-1.5),
            UtilityFamily::Tabulated(t) => t.eval(w).2,
        }
    }

    fn inv_du(&self, m: f64) -> f64 {
        match self {
            UtilityFamily::Cara { r } => -(m / r).ln() / r,
            UtilityFamily::Log => 1.0 / m,
            UtilityFamily::Crra { gamma } => m.powf(-1.0 / gamma),
            UtilityFamily::Sqrt => 0.25 / (m * m),
            UtilityFamily::Tabulated(t) => t.inverse_marginal(m),
        }
    }

    fn h(&self, v: f64) -> f64 {
        match self {
            UtilityFamily::Cara { r } => -(-v).ln() / r,
            UtilityFamily::Log => v.exp(),
            UtilityFamily::Crra { gamma } => ((1.0 - gamma) * v).powf(1.0 / (1.0 - gamma)),
            UtilityFamily::Sqrt => v * v,
            UtilityFamily::Tabulated(t) => t.inverse(v),
        }
    }

    fn dh(&self, v: f64) -> f64 {
        match self {
            UtilityFamily::Cara { r } => -1.0 / (r * v),
            UtilityFamily::Log => v.exp(),
            UtilityFamily::Crra { gamma } => self.h(v).powf(*gamma),
            UtilityFamily::Sqrt => 2.0 * v,
            UtilityFamily::Tabulated(_) => 1.0 / self.du(self.h(v)),
        }
    }

    fn d2h(&self, v: f64) -> f64 {
        match self {
            UtilityFamily::Cara { r } => 1.0 / (r * v * v),
            UtilityFamily::Log => v.exp(),
            UtilityFamily::Crra { gamma } => gamma * self.h(v).powf(2.0 * gamma - 1.0),
            UtilityFamily::Sqrt => 2.0,
            UtilityFamily::Tabulated(_) => {
                let w = self.h(v);
                let d = self.du(w);
                -self.d2u(w) / (d * d * d)
            }
        }
    }
}

/// Strictly increasing, strictly concave utility with a wage domain.
///
/// The domain is an open interval; instance files may tighten the family's
/// default domain but never widen it.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityModel {
    family: UtilityFamily,
    domain: (f64, f64),
}

impl UtilityModel {
    pub fn new(family: UtilityFamily) -> Result<Self> {
        match &family {
            UtilityFamily::Cara { r } if !(*r > 0.0 && r.is_finite()) => {
                return Err(Error::DomainError(format!("CARA needs r > 0, got {r}")));
            }
            UtilityFamily::Crra { gamma }
                if !(*gamma > 0.0 && gamma.is_finite()) || (*gamma - 1.0).abs() < 1e-12 =>
            {
                return Err(Error::DomainError(format!(
                    "CRRA needs gamma > 0 and gamma != 1, got {gamma}"
                )));
            }
            _ => {}
        }
        let domain = family.default_domain();
        Ok(UtilityModel { family, domain })
    }

    pub fn cara(r: f64) -> Result<Self> {
        Self::new(UtilityFamily::Cara { r })
    }

    pub fn log() -> Self {
        Self::new(UtilityFamily::Log).expect("log utility has no parameters")
    }

    pub fn crra(gamma: f64) -> Result<Self> {
        Self::new(UtilityFamily::Crra { gamma })
    }

    pub fn sqrt() -> Self {
        Self::new(UtilityFamily::Sqrt).expect("sqrt utility has no parameters")
    }

    /// Restricts the wage domain to `(lo, hi)`, which must lie inside the
    /// current domain.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || lo < self.domain.0 || hi > self.domain.1 {
            return Err(Error::DomainError(format!(
                "domain ({lo}, {hi}) is empty or widens the default ({}, {})",
                self.domain.0, self.domain.1
            )));
        }
        self.domain = (lo, hi);
        Ok(self)
    }

    pub fn family(&self) -> &UtilityFamily {
        &self.family
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Open interval of utility values attained on the domain.
    pub fn range(&self) -> (f64, f64) {
        (self.family.u(self.domain.0), self.family.u(self.domain.1))
    }

    pub fn in_domain(&self, w: f64) -> bool {
        w > self.domain.0 && w < self.domain.1
    }

    pub fn in_range(&self, v: f64) -> bool {
        let (lo, hi) = self.range();
        v > lo && v < hi
    }

    fn check_wage(&self, w: f64) -> Result<()> {
        if self.in_domain(w) {
            Ok(())
        } else {
            Err(Error::DomainError(format!(
                "wage {w} outside domain ({}, {}) of {} utility",
                self.domain.0,
                self.domain.1,
                self.family.name()
            )))
        }
    }

    fn check_utility(&self, v: f64) -> Result<()> {
        if self.in_range(v) {
            Ok(())
        } else {
            let (lo, hi) = self.range();
            Err(Error::DomainError(format!(
                "utility {v} outside range ({lo}, {hi}) of {} utility",
                self.family.name()
            )))
        }
    }

    pub fn evaluate(&self, w: f64) -> Result<f64> {
        self.check_wage(w)?;
        Ok(self.family.u(w))
    }

    pub fn marginal(&self, w: f64) -> Result<f64> {
        self.check_wage(w)?;
        Ok(self.family.du(w))
    }

    pub fn second_derivative(&self, w: f64) -> Result<f64> {
        self.check_wage(w)?;
        Ok(self.family.d2u(w))
    }

    /// `(u')^-1(m)`: the wage at which marginal utility equals `m`.
    pub fn inverse_marginal(&self, m: f64) -> Result<f64> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::DomainError(format!(
                "marginal utility {m} must be positive and finite"
            )));
        }
        let w = self.family.inv_du(m);
        self.check_wage(w)?;
        Ok(w)
    }

    /// `h(v) = u^-1(v)`.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        self.check_utility(v)?;
        Ok(self.family.h(v))
    }

    /// `h'(v) = 1 / u'(h(v))`.
    pub fn inverse_derivative(&self, v: f64) -> Result<f64> {
        self.check_utility(v)?;
        Ok(self.family.dh(v))
    }

    /// `h''(v) = -u''(h) / u'(h)^3`, positive because `u` is concave.
    pub fn inverse_second_derivative(&self, v: f64) -> Result<f64> {
        self.check_utility(v)?;
        Ok(self.family.d2h(v))
    }

    // Unchecked versions for inner loops where the caller has already
    // verified range membership.
    pub(crate) fn u_raw(&self, w: f64) -> f64 {
        self.family.u(w)
    }
    pub(crate) fn du_raw(&self, w: f64) -> f64 {
        self.family.du(w)
    }
    pub(crate) fn h_raw(&self, v: f64) -> f64 {
        self.family.h(v)
    }
    pub(crate) fn dh_raw(&self, v: f64) -> f64 {
        self.family.dh(v)
    }
    pub(crate) fn d2h_raw(&self, v: f64) -> f64 {
        self.family.d2h(v)
    }
    pub(crate) fn d2u_raw(&self, w: f64) -> f64 {
        self.family.d2u(w)
    }
    pub(crate) fn inv_du_raw(&self, m: f64) -> f64 {
        self.family.inv_du(m)
    }
}

/// Utility sampled on a grid and interpolated with a monotone cubic
/// (Fritsch-Carlson) Hermite spline.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedUtility {
    grid: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedUtility {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n < 3 || values.len() != n {
            return Err(Error::DomainError(
                "tabulated utility needs at least 3 matching grid/value points".into(),
            ));
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]))
            .collect();
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DomainError("grid must be strictly increasing".into()));
        }
        if secants.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::DomainError("values must be strictly increasing".into()));
        }
        if secants.windows(2).any(|s| !(s[1] < s[0])) {
            return Err(Error::DomainError("values must be strictly concave".into()));
        }
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            // harmonic mean keeps the interpolant monotone
            slopes[i] = 2.0 / (1.0 / secants[i - 1] + 1.0 / secants[i]);
        }
        Ok(TabulatedUtility {
            grid,
            values,
            slopes,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value, first and second derivative at `w`, extrapolating linearly
    /// outside the grid.
    fn eval(&self, w: f64) -> (f64, f64, f64) {
        let n = self.grid.len();
        if w <= self.grid[0] {
            return (
                self.values[0] + self.slopes[0] * (w - self.grid[0]),
                self.slopes[0],
                0.0,
            );
        }
        if w >= self.grid[n - 1] {
            return (
                self.values[n - 1] + self.slopes[n - 1] * (w - self.grid[n - 1]),
                self.slopes[n - 1],
                0.0,
            );
        }
        let i = self.grid.partition_point(|g| *g <= w) - 1;
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let hgt = x1 - x0;
        let t = (w - x0) / hgt;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * hgt, self.slopes[i + 1] * hgt);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let d1 = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        let d2 = (12.0 * t - 6.0) * y0
            + (6.0 * t - 4.0) * m0
            + (-12.0 * t + 6.0) * y1
            + (6.0 * t - 2.0) * m1;
        (val, d1 / hgt, d2 / (hgt * hgt))
    }

    fn bisect<F: Fn(f64) -> f64>(&self, f: F, target: f64, increasing: bool) -> f64 {
        let mut lo = self.grid[0];
        let mut hi = *self.grid.last().unwrap();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let above = f(mid) > target;
            if above == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn inverse(&self, v: f64) -> f64 {
        self.bisect(|w| self.eval(w).0, v, true)
    }

    fn inverse_marginal(&self, m: f64) -> f64 {
        self.bisect(|w| self.eval(w).1, m, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<UtilityModel> {
        vec![
            UtilityModel::cara(1.0).unwrap(),
            UtilityModel::cara(2.5).unwrap(),
            UtilityModel::log(),
            UtilityModel::crra(0.5).unwrap(),
            UtilityModel::crra(2.0).unwrap(),
            UtilityModel::sqrt(),
        ]
    }

    const SAMPLE_WAGES: [f64; 7] = [0.05, 0.3, 0.9, 1.7, 2.4, 4.0, 7.5];

    #[test]
    fn closed_form_examples() {
        let cara = UtilityModel::cara(1.0).unwrap();
        assert!((cara.evaluate(3.0).unwrap() + (-3.0f64).exp()).abs() < 1e-15);
        assert!((cara.evaluate(3.0).unwrap() + 0.049787).abs() < 1e-6);
        assert!((cara.inverse_marginal((-2.0f64).exp()).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(UtilityModel::log().inverse(0.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            UtilityModel::log().evaluate(0.0),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            UtilityModel::log().evaluate(-1.0),
            Err(Error::DomainError(_))
        ));
        let cara = UtilityModel::cara(1.0).unwrap();
        assert!(matches!(cara.inverse(0.0), Err(Error::DomainError(_))));
        assert!(matches!(cara.inverse(0.5), Err(Error::DomainError(_))));
        assert!(UtilityModel::cara(0.0).is_err());
        assert!(UtilityModel::crra(1.0).is_err());
        assert!(UtilityModel::log().with_domain(-1.0, 5.0).is_err());
        assert!(UtilityModel::log().with_domain(0.5, 5.0).is_ok());
    }

    #[test]
    fn inverses_round_trip() {
        for m in families() {
            for &w in &SAMPLE_WAGES {
                let v = m.evaluate(w).unwrap();
                let back = m.inverse(v).unwrap();
                assert!((back - w).abs() <= 1e-10 * w.max(1.0), "{m:?} w={w}");
                let mu = m.marginal(w).unwrap();
                let back = m.inverse_marginal(mu).unwrap();
                assert!((back - w).abs() <= 1e-10 * w.max(1.0), "{m:?} w={w}");
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let eps = 1e-5;
        for m in families() {
            for &w in &SAMPLE_WAGES {
                let fd = (m.evaluate(w + eps).unwrap() - m.evaluate(w - eps).unwrap()) / (2.0 * eps);
                let d = m.marginal(w).unwrap();
                assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "{m:?} u' at {w}");

                let fd2 = (m.marginal(w + eps).unwrap() - m.marginal(w - eps).unwrap()) / (2.0 * eps);
                let d2 = m.second_derivative(w).unwrap();
                assert!((d2 - fd2).abs() <= 1e-5 * d2.abs().max(1.0), "{m:?} u'' at {w}");

                let v = m.evaluate(w).unwrap();
                let hv = eps * v.abs().clamp(1e-3, 1.0) * if v.abs() < 1e-2 { v.abs() * 10.0 } else { 1.0 };
                let fdh = (m.inverse(v + hv).unwrap() - m.inverse(v - hv).unwrap()) / (2.0 * hv);
                let dh = m.inverse_derivative(v).unwrap();
                assert!((dh - fdh).abs() <= 1e-6 * dh.abs().max(1.0), "{m:?} h' at {v}");

                let fdh2 = (m.inverse_derivative(v + hv).unwrap()
                    - m.inverse_derivative(v - hv).unwrap())
                    / (2.0 * hv);
                let dh2 = m.inverse_second_derivative(v).unwrap();
                assert!((dh2 - fdh2).abs() <= 1e-4 * dh2.abs().max(1.0), "{m:?} h'' at {v}");
            }
        }
    }

    #[test]
    fn concave_u_convex_h() {
        for m in families() {
            for &a in &SAMPLE_WAGES {
                for &b in &SAMPLE_WAGES {
                    for lam in [0.2, 0.5, 0.9] {
                        let mid = lam * a + (1.0 - lam) * b;
                        let lhs = m.evaluate(mid).unwrap();
                        let rhs =
                            lam * m.evaluate(a).unwrap() + (1.0 - lam) * m.evaluate(b).unwrap();
                        assert!(lhs >= rhs - 1e-12);
                    }
                    let (va, vb) = (m.evaluate(a).unwrap(), m.evaluate(b).unwrap());
                    let hm = m.inverse(0.5 * (va + vb)).unwrap();
                    assert!(hm <= 0.5 * (a + b) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ranges() {
        assert_eq!(UtilityModel::cara(1.0).unwrap().range(), (f64::NEG_INFINITY, -0.0));
        assert_eq!(UtilityModel::log().range(), (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!(UtilityModel::sqrt().range(), (0.0, f64::INFINITY));
        assert_eq!(UtilityModel::crra(2.0).unwrap().range().1, -0.0);
        let tight = UtilityModel::log().with_domain(1.0, f64::INFINITY).unwrap();
        assert_eq!(tight.range().0, 0.0);
    }

    #[test]
    fn tabulated_tracks_log() {
        let grid: Vec<f64> = (1..=200).map(|i| 0.05 * i as f64).collect();
        let values: Vec<f64> = grid.iter().map(|w| w.ln()).collect();
        let tab = TabulatedUtility::new(grid, values).unwrap();
        let m = UtilityModel::new(UtilityFamily::Tabulated(tab)).unwrap();
        for w in [0.5, 1.0, 3.3, 7.0] {
            assert!((m.evaluate(w).unwrap() - w.ln()).abs() < 1e-4);
            assert!((m.marginal(w).unwrap() - 1.0 / w).abs() < 1e-2);
            let v = m.evaluate(w).unwrap();
            assert!((m.inverse(v).unwrap() - w).abs() < 1e-9);
        }
        assert!(TabulatedUtility::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0]).is_err());
    }
}
