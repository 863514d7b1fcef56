//! Yang-Prentice regression with short- and long-term hazard ratios; the
//! proportional hazards (PH) and proportional odds (PO) classes are the
//! constrained cases `beta_long = beta_short` and `beta_long = 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::Baseline;
use crate::error::{Error, Result};
use crate::special::softplus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegressionClass {
    #[serde(rename = "PH")]
    Ph,
    #[serde(rename = "PO")]
    Po,
    #[serde(rename = "YP")]
    Yp,
}

impl RegressionClass {
    pub const ALL: [RegressionClass; 3] = [RegressionClass::Ph, RegressionClass::Po, RegressionClass::Yp];

    pub fn name(self) -> &'static str {
        match self {
            RegressionClass::Ph => "PH",
            RegressionClass::Po => "PO",
            RegressionClass::Yp => "YP",
        }
    }

    /// Number of free coefficients for `q` covariates.
    pub fn n_coefficients(self, q: usize) -> usize {
        match self {
            RegressionClass::Yp => 2 * q,
            _ => q,
        }
    }
}

impl fmt::Display for RegressionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegressionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PH" => Ok(RegressionClass::Ph),
            "PO" => Ok(RegressionClass::Po),
            "YP" => Ok(RegressionClass::Yp),
            other => Err(Error::InvalidInput(format!("unknown regression class '{other}'"))),
        }
    }
}

/// Regression class with its short- and long-term coefficient vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub class: RegressionClass,
    pub beta_short: Vec<f64>,
    pub beta_long: Vec<f64>,
}

impl Regression {
    pub fn new(class: RegressionClass, beta_short: Vec<f64>, beta_long: Vec<f64>) -> Result<Self> {
        if beta_short.len() != beta_long.len() {
            return Err(Error::Dimension { expected: beta_short.len(), got: beta_long.len() });
        }
        if beta_short.iter().chain(&beta_long).any(|b| !b.is_finite()) {
            return Err(Error::domain("regression coefficients must be finite"));
        }
        let ok = match class {
            RegressionClass::Ph => beta_short == beta_long,
            RegressionClass::Po => beta_long.iter().all(|&b| b == 0.0),
            RegressionClass::Yp => true,
        };
        if !ok {
            return Err(Error::domain(format!("coefficients violate the {class} constraint")));
        }
        Ok(Regression { class, beta_short, beta_long })
    }

    pub fn yp(beta_short: Vec<f64>, beta_long: Vec<f64>) -> Result<Self> {
        Self::new(RegressionClass::Yp, beta_short, beta_long)
    }

    pub fn ph(beta: Vec<f64>) -> Self {
        Regression { class: RegressionClass::Ph, beta_long: beta.clone(), beta_short: beta }
    }

    pub fn po(beta: Vec<f64>) -> Self {
        let q = beta.len();
        Regression { class: RegressionClass::Po, beta_short: beta, beta_long: vec![0.0; q] }
    }

    /// Coefficients for `q` covariates, all zero.
    pub fn zero(class: RegressionClass, q: usize) -> Self {
        Regression { class, beta_short: vec![0.0; q], beta_long: vec![0.0; q] }
    }

    pub fn n_covariates(&self) -> usize {
        self.beta_short.len()
    }

    /// `(ln φS, ln φL)` for the covariate row `x`.
    pub fn log_ratios(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.beta_short.len() {
            return Err(Error::Dimension { expected: self.beta_short.len(), got: x.len() });
        }
        Ok(self.log_ratios_unchecked(x))
    }

    pub(crate) fn log_ratios_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let s = dot(x, &self.beta_short);
        let l = match self.class {
            RegressionClass::Ph => s,
            RegressionClass::Po => 0.0,
            RegressionClass::Yp => dot(x, &self.beta_long),
        };
        (s, l)
    }

    /// Short- and long-term hazard ratios `(φS, φL)`.
    pub fn short_long_ratios(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (s, l) = self.log_ratios(x)?;
        Ok((s.exp(), l.exp()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln R0 = ln(exp(H0) - 1)` without overflow.
#[inline]
pub(crate) fn log_odds_from_cum_hazard(h0: f64) -> f64 {
    if h0 < 30.0 {
        h0.exp_m1().ln()
    } else {
        h0 + (-(-h0).exp()).ln_1p()
    }
}

/// Log survival and log hazard of the YP model from the baseline's
/// cumulative hazard and log hazard.
#[inline]
pub(crate) fn yp_log_terms(ln_phi_s: f64, ln_phi_l: f64, h0: f64, ln_h0: f64) -> (f64, f64) {
    let phi_l = ln_phi_l.exp();
    let phi_s = ln_phi_s.exp();
    let log_surv = -phi_l * softplus(ln_phi_s - ln_phi_l + log_odds_from_cum_hazard(h0));
    // φS F0 + φL S0
    let denom = phi_s * -(-h0).exp_m1() + phi_l * (-h0).exp();
    let log_haz = ln_phi_s + ln_phi_l + ln_h0 - denom.ln();
    (log_surv, log_haz)
}

/// A marginal survival model: baseline plus regression structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginModel {
    pub baseline: Baseline,
    pub regression: Regression,
}

impl MarginModel {
    pub fn new(baseline: Baseline, regression: Regression) -> Self {
        MarginModel { baseline, regression }
    }

    fn log_terms(&self, x: &[f64], t: f64) -> Result<(f64, f64)> {
        let (ls, ll) = self.regression.log_ratios(x)?;
        let h0 = self.baseline.cum_hazard(t)?;
        let ln_h0 = self.baseline.hazard_unchecked(t).ln();
        Ok(yp_log_terms(ls, ll, h0, ln_h0))
    }

    pub fn log_survival(&self, x: &[f64], t: f64) -> Result<f64> {
        let (ls, ll) = self.regression.log_ratios(x)?;
        let h0 = self.baseline.cum_hazard(t)?;
        Ok(yp_log_terms(ls, ll, h0, 0.0).0)
    }

    pub fn survival(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.log_survival(x, t)?.exp())
    }

    pub fn hazard(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.log_terms(x, t)?.1.exp())
    }

    pub fn density(&self, x: &[f64], t: f64) -> Result<f64> {
        let (ls, lh) = self.log_terms(x, t)?;
        Ok((ls + lh).exp())
    }

    /// Solves `S(t | x) = u` for `t`.
    pub fn inverse_survival(&self, x: &[f64], u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain(format!("survival level {u} must lie in (0, 1)")));
        }
        let (ls, ll) = self.regression.log_ratios(x)?;
        let phi_l = ll.exp();
        // R0 = (φL/φS)(u^{-1/φL} - 1)
        let r0 = (ll - ls).exp() * (-u.ln() / phi_l).exp_m1();
        let h0 = r0.ln_1p();
        self.baseline.cum_hazard_inverse(h0)
    }

    /// Univariate censored log-likelihood `Σ δ ln h(y) + ln S(y)`.
    pub fn log_likelihood(&self, y: &[f64], delta: &[bool], x: &[Vec<f64>]) -> Result<f64> {
        if y.len() != delta.len() || y.len() != x.len() {
            return Err(Error::Dimension { expected: y.len(), got: delta.len().min(x.len()) });
        }
        let mut acc = 0.0;
        for i in 0..y.len() {
            let (ls, lh) = self.log_terms(&x[i], y[i])?;
            acc += ls + if delta[i] { lh } else { 0.0 };
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp1() -> Baseline {
        Baseline::weibull(1.0, 1.0).unwrap()
    }

    #[test]
    fn ratios() {
        let r = Regression::yp(vec![-0.7, 0.4], vec![0.8, -0.6]).unwrap();
        assert_eq!(r.short_long_ratios(&[0.0, 0.0]).unwrap(), (1.0, 1.0));
        let (s, _) = r.short_long_ratios(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(s, (-0.7f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(s, 0.4966, epsilon = 1e-4);
        let po = Regression::po(vec![0.3, -1.2]);
        assert_eq!(po.short_long_ratios(&[2.0, 5.0]).unwrap().1, 1.0);
        assert!(matches!(r.short_long_ratios(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn class_constraints_enforced() {
        assert!(Regression::new(RegressionClass::Ph, vec![1.0], vec![0.5]).is_err());
        assert!(Regression::new(RegressionClass::Po, vec![1.0], vec![0.5]).is_err());
        assert!(Regression::new(RegressionClass::Yp, vec![1.0], vec![0.5, 1.0]).is_err());
    }

    #[test]
    fn survival_reductions() {
        let m = MarginModel::new(exp1(), Regression::yp(vec![0.2], vec![-0.4]).unwrap());
        assert_relative_eq!(m.survival(&[0.0], 2f64.ln()).unwrap(), 0.5, epsilon = 1e-15);
        // PH with φ = 2, H0 = 0.5
        let ph = MarginModel::new(exp1(), Regression::ph(vec![2f64.ln()]));
        assert_relative_eq!(ph.survival(&[1.0], 0.5).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        // PO with φS = 2, R0 = 1
        let po = MarginModel::new(exp1(), Regression::po(vec![2f64.ln()]));
        assert_relative_eq!(po.survival(&[1.0], 2f64.ln()).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn hazard_limits() {
        let w = Baseline::weibull(1.2, 0.8).unwrap();
        let m = MarginModel::new(w.clone(), Regression::yp(vec![-0.7, 0.4], vec![0.8, -0.6]).unwrap());
        let x = [1.0, 0.3];
        let (phi_s, phi_l) = m.regression.short_long_ratios(&x).unwrap();
        let zero = [0.0, 0.0];
        assert_relative_eq!(m.hazard(&zero, 0.7).unwrap(), w.hazard(0.7).unwrap(), epsilon = 1e-14);
        let early = m.hazard(&x, 1e-8).unwrap() / m.hazard(&zero, 1e-8).unwrap();
        assert_relative_eq!(early, phi_s, max_relative = 1e-4);
        // H0(t) = 20
        let t_late = (20.0f64 / 0.8).powf(1.0 / 1.2);
        let late = m.hazard(&x, t_late).unwrap() / m.hazard(&zero, t_late).unwrap();
        assert_relative_eq!(late, phi_l, max_relative = 1e-4);
    }

    #[test]
    fn hazard_equivalent_forms() {
        let w = Baseline::weibull(1.6, 1.2).unwrap();
        let m = MarginModel::new(w.clone(), Regression::yp(vec![-0.9, 0.6], vec![1.0, -0.8]).unwrap());
        for &(x0, x1, t) in &[(1.0, 0.5, 0.3), (0.0, -1.2, 1.4), (1.0, 2.0, 2.2)] {
            let (ps, pl) = m.regression.short_long_ratios(&[x0, x1]).unwrap();
            let r0 = w.odds(t).unwrap();
            let dr0 = w.odds_deriv(t).unwrap();
            let form1 = ps * pl * dr0 / (pl + ps * r0);
            let s0 = w.survival(t).unwrap();
            let form2 = ps * pl / (ps * (1.0 - s0) + pl * s0) * w.hazard(t).unwrap();
            let h = m.hazard(&[x0, x1], t).unwrap();
            assert_relative_eq!(h, form1, max_relative = 1e-12);
            assert_relative_eq!(h, form2, max_relative = 1e-12);
        }
    }

    #[test]
    fn density_is_minus_survival_derivative() {
        let m = MarginModel::new(
            Baseline::weibull(1.2, 0.8).unwrap(),
            Regression::yp(vec![-0.7, 0.4], vec![0.8, -0.6]).unwrap(),
        );
        assert_relative_eq!(
            MarginModel::new(exp1(), Regression::zero(RegressionClass::Yp, 1)).density(&[0.0], 1.0).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        let x = [1.0, -0.4];
        for &t in &[0.2, 1.0, 2.5] {
            let eps = 1e-5;
            let fd = -(m.survival(&x, t + eps).unwrap() - m.survival(&x, t - eps).unwrap()) / (2.0 * eps);
            assert!((fd - m.density(&x, t).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn inverse_survival_roundtrip() {
        let m = MarginModel::new(
            Baseline::weibull(1.6, 1.2).unwrap(),
            Regression::yp(vec![-0.9, 0.6], vec![1.0, -0.8]).unwrap(),
        );
        let e = MarginModel::new(exp1(), Regression::zero(RegressionClass::Ph, 2));
        assert_relative_eq!(e.inverse_survival(&[0.0, 0.0], 0.5).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(e.inverse_survival(&[0.0, 0.0], 1.0 - 1e-12).unwrap() < 1e-11);
        for &x in &[[0.0, 0.0], [1.0, -1.3], [1.0, 2.1]] {
            for &u in &[0.001, 0.2, 0.5, 0.9, 0.999] {
                let t = m.inverse_survival(&x, u).unwrap();
                assert!((m.survival(&x, t).unwrap() - u).abs() < 1e-9);
            }
        }
        assert!(m.inverse_survival(&[0.0, 0.0], 0.0).is_err());
    }
}
