//! Bivariate Archimedean copulas: AMH, Clayton, Frank, Gumbel-Hougaard and Joe.
//!
//! Closed forms for the distribution function, the conditional distribution
//! `∂C/∂u_j` and the density are hard-coded per family. Expressions that lose
//! precision near the unit-square boundary or near independence are evaluated
//! in log space with `ln_1p`/`exp_m1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;
use crate::special::{debye1, digamma, log_add_exp, trigamma};

/// Below this |θ| the Frank copula is evaluated by a second-order expansion
/// around independence.
const FRANK_TAYLOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CopulaFamily {
    #[serde(rename = "AMH")]
    Amh,
    Clayton,
    Frank,
    #[serde(rename = "GH")]
    Gumbel,
    Joe,
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 5] = [
        CopulaFamily::Amh,
        CopulaFamily::Clayton,
        CopulaFamily::Frank,
        CopulaFamily::Gumbel,
        CopulaFamily::Joe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CopulaFamily::Amh => "AMH",
            CopulaFamily::Clayton => "Clayton",
            CopulaFamily::Frank => "Frank",
            CopulaFamily::Gumbel => "GH",
            CopulaFamily::Joe => "Joe",
        }
    }

    /// Closed bounds of the bivariate parameter space. Open ends are
    /// reported through [`CopulaFamily::contains`].
    pub fn theta_bounds(self) -> (f64, f64) {
        match self {
            CopulaFamily::Amh => (-1.0, 1.0),
            CopulaFamily::Clayton => (0.0, f64::INFINITY),
            CopulaFamily::Frank => (f64::NEG_INFINITY, f64::INFINITY),
            CopulaFamily::Gumbel | CopulaFamily::Joe => (1.0, f64::INFINITY),
        }
    }

    /// Whether `theta` is a valid bivariate parameter. Frank accepts θ = 0 as
    /// its independence limit.
    pub fn contains(self, theta: f64) -> bool {
        if !theta.is_finite() {
            return false;
        }
        match self {
            CopulaFamily::Amh => (-1.0..=1.0).contains(&theta),
            CopulaFamily::Clayton => theta > 0.0,
            CopulaFamily::Frank => true,
            CopulaFamily::Gumbel | CopulaFamily::Joe => theta >= 1.0,
        }
    }

    /// Parameter domain for dimension `d > 2`.
    pub fn contains_general(self, theta: f64) -> bool {
        match self {
            CopulaFamily::Amh => (0.0..=1.0).contains(&theta),
            CopulaFamily::Frank => theta > 0.0 && theta.is_finite(),
            _ => self.contains(theta),
        }
    }

    /// Range of Kendall's τ reachable by the family.
    pub fn tau_range(self) -> (f64, f64) {
        match self {
            CopulaFamily::Amh => ((5.0 - 8.0 * std::f64::consts::LN_2) / 3.0, 1.0 / 3.0),
            CopulaFamily::Clayton => (0.0, 1.0),
            CopulaFamily::Frank => (-1.0, 1.0),
            CopulaFamily::Gumbel | CopulaFamily::Joe => (0.0, 1.0),
        }
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "amh" | "ali-mikhail-haq" => Ok(CopulaFamily::Amh),
            "clayton" => Ok(CopulaFamily::Clayton),
            "frank" => Ok(CopulaFamily::Frank),
            "gh" | "gumbel" | "gumbel-hougaard" => Ok(CopulaFamily::Gumbel),
            "joe" => Ok(CopulaFamily::Joe),
            other => Err(Error::InvalidInput(format!("unknown copula family '{other}'"))),
        }
    }
}

/// Which argument a partial derivative is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrt {
    First,
    Second,
}

/// A copula family together with its dependence parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Copula {
    family: CopulaFamily,
    theta: f64,
}

/// Result of inverting Kendall's τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauInversion {
    pub copula: Copula,
    /// Set when τ exceeded the family's range and was truncated to it.
    pub clamped: bool,
}

impl Copula {
    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self> {
        if !family.contains(theta) {
            return Err(Error::domain(format!("theta = {theta} outside the {family} parameter space")));
        }
        Ok(Copula { family, theta })
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn frank_taylor(&self) -> bool {
        self.family == CopulaFamily::Frank && self.theta.abs() < FRANK_TAYLOR
    }

    /// The generator ψ_θ(w).
    pub fn generator(&self, w: f64) -> Result<f64> {
        if !(w >= 0.0) {
            return Err(Error::domain(format!("generator argument {w} must be >= 0")));
        }
        if w == f64::INFINITY {
            return Ok(0.0);
        }
        let t = self.theta;
        Ok(match self.family {
            CopulaFamily::Amh if t == 1.0 => 1.0 / (1.0 + w),
            CopulaFamily::Amh => (1.0 - t) / (w.exp() - t),
            CopulaFamily::Clayton => (-(t * w).ln_1p() / t).exp(),
            CopulaFamily::Frank if t == 0.0 => (-w).exp(),
            CopulaFamily::Frank => -((-w).exp() * (-t).exp_m1()).ln_1p() / t,
            CopulaFamily::Gumbel => (-w.powf(1.0 / t)).exp(),
            CopulaFamily::Joe => -((-(-w).exp()).ln_1p() / t).exp_m1(),
        })
    }

    /// The inverse generator ψ_θ^{-1}(u). Returns `+∞` at `u = 0`.
    pub fn generator_inverse(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("generator inverse argument {u} outside [0, 1]")));
        }
        if u == 0.0 {
            return Ok(f64::INFINITY);
        }
        if u == 1.0 {
            return Ok(0.0);
        }
        Ok(self.phi(u))
    }

    fn phi(&self, u: f64) -> f64 {
        let t = self.theta;
        match self.family {
            CopulaFamily::Amh if t == 1.0 => (1.0 - u) / u,
            CopulaFamily::Amh => (-t * (1.0 - u)).ln_1p() - u.ln(),
            CopulaFamily::Clayton => (-t * u.ln()).exp_m1() / t,
            CopulaFamily::Frank if t == 0.0 => -u.ln(),
            CopulaFamily::Frank => -((-t * u).exp_m1() / (-t).exp_m1()).ln(),
            CopulaFamily::Gumbel => (-u.ln()).powf(t),
            CopulaFamily::Joe => -(-(t * (-u).ln_1p()).exp()).ln_1p(),
        }
    }

    /// Copula distribution function for any dimension `d >= 2`.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        if u.len() < 2 {
            return Err(Error::Dimension { expected: 2, got: u.len() });
        }
        if let Some(bad) = u.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::domain(format!("copula argument {bad} outside [0, 1]")));
        }
        if u.len() > 2 && !self.family.contains_general(self.theta) {
            return Err(Error::domain(format!(
                "theta = {} outside the {}-dimensional {} parameter space",
                self.theta,
                u.len(),
                self.family
            )));
        }
        if u.iter().any(|&x| x == 0.0) {
            return Ok(0.0);
        }
        let inner: Vec<f64> = u.iter().copied().filter(|&x| x < 1.0).collect();
        match inner.len() {
            0 => Ok(1.0),
            1 => Ok(inner[0]),
            2 => Ok(self.log_cdf2(inner[0], inner[1]).exp()),
            _ => Ok(self.cdf_general(&inner)),
        }
    }

    fn cdf_general(&self, u: &[f64]) -> f64 {
        let t = self.theta;
        match self.family {
            CopulaFamily::Amh if t == 1.0 => 1.0 / (1.0 + u.iter().map(|&x| 1.0 / x - 1.0).sum::<f64>()),
            CopulaFamily::Amh => {
                let prod: f64 = u.iter().map(|&x| (1.0 - t * (1.0 - x)) / x).product();
                (1.0 - t) / (prod - t)
            }
            CopulaFamily::Clayton => {
                let s: f64 = u.iter().map(|&x| (-t * x.ln()).exp_m1()).sum();
                (-s.ln_1p() / t).exp()
            }
            CopulaFamily::Frank => {
                // prod(b_j) / a^{d-1}, each b_j / a in (0, 1)
                let a = (-t).exp_m1();
                let ratio = a * u.iter().map(|&x| (-t * x).exp_m1() / a).product::<f64>();
                -ratio.ln_1p() / t
            }
            CopulaFamily::Gumbel => {
                let log_a = u
                    .iter()
                    .map(|&x| t * (-x.ln()).ln())
                    .fold(f64::NEG_INFINITY, log_add_exp);
                (-(log_a / t).exp()).exp()
            }
            CopulaFamily::Joe => {
                let log_prod: f64 = u.iter().map(|&x| (-(t * (-x).ln_1p()).exp()).ln_1p()).sum();
                // 1 - (1 - prod)^{1/θ}
                -((-log_prod.exp()).ln_1p() / t).exp_m1()
            }
        }
    }

    /// `ln C(u1, u2)` for interior arguments.
    pub fn log_cdf2(&self, u1: f64, u2: f64) -> f64 {
        let t = self.theta;
        match self.family {
            CopulaFamily::Amh => u1.ln() + u2.ln() - (-t * (1.0 - u1) * (1.0 - u2)).ln_1p(),
            CopulaFamily::Clayton => {
                let s = (-t * u1.ln()).exp_m1() + (-t * u2.ln()).exp_m1();
                -s.ln_1p() / t
            }
            CopulaFamily::Frank if self.frank_taylor() => {
                let (a1, a2) = (u1 * (1.0 - u1), u2 * (1.0 - u2));
                let base = u1 * u2;
                let c = base
                    + 0.5 * t * a1 * a2
                    + t * t / 12.0 * a1 * a2 * (1.0 - 2.0 * u1) * (1.0 - 2.0 * u2);
                c.ln()
            }
            CopulaFamily::Frank => {
                let a = (-t).exp_m1();
                let b1 = (-t * u1).exp_m1();
                let b2 = (-t * u2).exp_m1();
                (-(b1 * b2 / a).ln_1p() / t).ln()
            }
            CopulaFamily::Gumbel => {
                let log_a = log_add_exp(t * (-u1.ln()).ln(), t * (-u2.ln()).ln());
                -(log_a / t).exp()
            }
            CopulaFamily::Joe => {
                let log_b = self.joe_log_b(u1, u2);
                (-(log_b / t).exp_m1()).ln()
            }
        }
    }

    /// `ln B` with `B = 1 - (1 - ū1^θ)(1 - ū2^θ)`.
    fn joe_log_b(&self, u1: f64, u2: f64) -> f64 {
        let t = self.theta;
        // B = p1 + p2 (1 - p1) with p = (1 - u)^θ; both terms are nonnegative
        let lp1 = t * (-u1).ln_1p();
        let lp2 = t * (-u2).ln_1p();
        log_add_exp(lp1, lp2 + (-lp1.exp_m1()).ln())
    }

    /// `∂C/∂u_wrt`, the conditional distribution of the other coordinate.
    pub fn partial(&self, u1: f64, u2: f64, wrt: Wrt) -> Result<f64> {
        check_interior(u1, u2)?;
        Ok(match wrt {
            Wrt::First => self.log_h(u1, u2).exp(),
            Wrt::Second => self.log_h(u2, u1).exp(),
        })
    }

    /// `ln ∂C(a, b)/∂a`. All five families are exchangeable, so the second
    /// partial is `log_h(u2, u1)`.
    pub fn log_h(&self, a: f64, b: f64) -> f64 {
        let t = self.theta;
        match self.family {
            CopulaFamily::Amh => {
                let d = 1.0 - t * (1.0 - a) * (1.0 - b);
                b.ln() + (-t * (1.0 - b)).ln_1p() - 2.0 * d.ln()
            }
            CopulaFamily::Clayton => {
                let s = (-t * a.ln()).exp_m1() + (-t * b.ln()).exp_m1();
                -(t + 1.0) * a.ln() - (1.0 / t + 1.0) * s.ln_1p()
            }
            CopulaFamily::Frank if self.frank_taylor() => {
                let h = b
                    + 0.5 * t * b * (2.0 * a - 1.0) * (b - 1.0)
                    + t * t / 12.0 * b * (b - 1.0) * (2.0 * b - 1.0) * (6.0 * a * a - 6.0 * a + 1.0);
                h.ln()
            }
            CopulaFamily::Frank => {
                let ea = (-t * a).exp();
                let bb = (-t * b).exp_m1();
                let denom = (-t).exp_m1() + (-t * a).exp_m1() * bb;
                (ea * bb / denom).ln()
            }
            CopulaFamily::Gumbel => {
                let la = (-a.ln()).ln();
                let lb = (-b.ln()).ln();
                let log_a = log_add_exp(t * la, t * lb);
                let log_c = -(log_a / t).exp();
                log_c + (1.0 / t - 1.0) * log_a + (t - 1.0) * la - a.ln()
            }
            CopulaFamily::Joe => {
                let log_b = self.joe_log_b(a, b);
                let one_minus_pb = -(t * (-b).ln_1p()).exp_m1();
                (1.0 / t - 1.0) * log_b + (t - 1.0) * (-a).ln_1p() + one_minus_pb.ln()
            }
        }
    }

    /// Copula density `∂²C/∂u1∂u2`.
    pub fn density(&self, u1: f64, u2: f64) -> Result<f64> {
        check_interior(u1, u2)?;
        Ok(self.log_density(u1, u2).exp())
    }

    /// `ln c(u1, u2)` for interior arguments.
    pub fn log_density(&self, u1: f64, u2: f64) -> f64 {
        let t = self.theta;
        match self.family {
            CopulaFamily::Amh => {
                let d = 1.0 - t * (1.0 - u1) * (1.0 - u2);
                let num = 1.0 + t * ((1.0 + u1) * (1.0 + u2) - 3.0) + t * t * (1.0 - u1) * (1.0 - u2);
                num.ln() - 3.0 * d.ln()
            }
            CopulaFamily::Clayton => {
                let s = (-t * u1.ln()).exp_m1() + (-t * u2.ln()).exp_m1();
                t.ln_1p() - (t + 1.0) * (u1.ln() + u2.ln()) - (1.0 / t + 2.0) * s.ln_1p()
            }
            CopulaFamily::Frank if self.frank_taylor() => {
                let p1 = 6.0 * u1 * u1 - 6.0 * u1 + 1.0;
                let p2 = 6.0 * u2 * u2 - 6.0 * u2 + 1.0;
                let c = 1.0 + 0.5 * t * (2.0 * u1 - 1.0) * (2.0 * u2 - 1.0) + t * t / 12.0 * p1 * p2;
                c.ln()
            }
            CopulaFamily::Frank => {
                let a = (-t).exp_m1();
                let denom = a + (-t * u1).exp_m1() * (-t * u2).exp_m1();
                (-t * a).ln() - t * (u1 + u2) - 2.0 * denom.abs().ln()
            }
            CopulaFamily::Gumbel => {
                let l1 = (-u1.ln()).ln();
                let l2 = (-u2.ln()).ln();
                let log_a = log_add_exp(t * l1, t * l2);
                let a_pow = (log_a / t).exp();
                -a_pow - u1.ln() - u2.ln() + (t - 1.0) * (l1 + l2) + (1.0 / t - 2.0) * log_a
                    + (a_pow + t - 1.0).ln()
            }
            CopulaFamily::Joe => {
                let log_b = self.joe_log_b(u1, u2);
                (1.0 / t - 2.0) * log_b
                    + (t - 1.0) * ((-u1).ln_1p() + (-u2).ln_1p())
                    + (t - 1.0 + log_b.exp()).ln()
            }
        }
    }

    /// Kendall's τ as a closed function of θ.
    pub fn kendall_tau(&self) -> f64 {
        kendall_tau(self.family, self.theta)
    }

    /// Draws one pair with uniform margins and joint law `C` by the
    /// conditional-distribution method.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u1: f64 = open_unit(rng);
        let v: f64 = open_unit(rng);
        (u1, self.conditional_inverse(u1, v))
    }

    /// Solves `∂C/∂u1 (u1, u2) = v` for `u2`.
    pub fn conditional_inverse(&self, u1: f64, v: f64) -> f64 {
        let t = self.theta;
        let closed = match self.family {
            CopulaFamily::Clayton => {
                let inner = (-t * u1.ln()).exp() * (-t / (1.0 + t) * v.ln()).exp_m1();
                Some((-inner.ln_1p() / t).exp())
            }
            CopulaFamily::Frank if !self.frank_taylor() => {
                let a = (-t).exp_m1();
                let b2 = v * a / (v + (1.0 - v) * (-t * u1).exp());
                Some(-b2.ln_1p() / t)
            }
            CopulaFamily::Amh => amh_conditional_inverse(t, u1, v),
            _ => None,
        };
        match closed {
            Some(u2) if u2 > 0.0 && u2 < 1.0 && u2.is_finite() => u2,
            _ => self.conditional_inverse_numeric(u1, v),
        }
    }

    fn conditional_inverse_numeric(&self, u1: f64, v: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if self.log_h(u1, mid).exp() < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.gen();
        if x > 0.0 {
            return x;
        }
    }
}

fn check_interior(u1: f64, u2: f64) -> Result<()> {
    if u1 > 0.0 && u1 < 1.0 && u2 > 0.0 && u2 < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("arguments ({u1}, {u2}) must lie in the open unit square")))
    }
}

/// Root of the AMH conditional equation, a quadratic in `u2`.
fn amh_conditional_inverse(t: f64, u1: f64, v: f64) -> Option<f64> {
    let a = 1.0 - u1;
    let k = 1.0 - t * a;
    let qa = t - v * t * t * a * a;
    let qb = 1.0 - t - 2.0 * v * k * t * a;
    let qc = -v * k * k;
    if qa.abs() < 1e-12 {
        return Some(-qc / qb);
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let q = -0.5 * (qb + qb.signum() * sq);
    let r1 = q / qa;
    let r2 = qc / q;
    [r1, r2].into_iter().find(|r| (0.0..=1.0).contains(r))
}

/// Kendall's τ for the given family and parameter.
pub fn kendall_tau(family: CopulaFamily, theta: f64) -> f64 {
    let t = theta;
    match family {
        CopulaFamily::Amh => {
            if t == 1.0 {
                1.0 / 3.0
            } else if t.abs() < 0.1 {
                const COEF: [f64; 11] = [
                    2.0 / 9.0,
                    1.0 / 18.0,
                    1.0 / 45.0,
                    1.0 / 90.0,
                    2.0 / 315.0,
                    1.0 / 252.0,
                    1.0 / 378.0,
                    1.0 / 540.0,
                    2.0 / 1485.0,
                    1.0 / 990.0,
                    1.0 / 1287.0,
                ];
                COEF.iter().rev().fold(0.0, |acc, c| acc * t + c) * t
            } else {
                (3.0 * t - 2.0) / (3.0 * t) - 2.0 * (1.0 - t).powi(2) * (-t).ln_1p() / (3.0 * t * t)
            }
        }
        CopulaFamily::Clayton => t / (t + 2.0),
        CopulaFamily::Frank => {
            if t.abs() < 1e-3 {
                t / 9.0 - t.powi(3) / 900.0
            } else {
                1.0 + 4.0 / t * (debye1(t) - 1.0)
            }
        }
        CopulaFamily::Gumbel => (t - 1.0) / t,
        CopulaFamily::Joe => {
            // τ = 1 - (2/θ) [ψ(1+z) - ψ(2)] / (z - 1), z = 2/θ
            let z = 2.0 / t;
            let eps = z - 1.0;
            let ratio = if eps.abs() < 1e-4 {
                const PSI2_2: f64 = -0.404_113_806_319_188_6; // ψ''(2)
                const PSI3_2: f64 = 0.493_939_402_266_829_1; // ψ'''(2)
                trigamma(2.0) + eps * PSI2_2 / 2.0 + eps * eps * PSI3_2 / 6.0
            } else {
                (digamma(1.0 + z) - digamma(2.0)) / eps
            };
            1.0 - 2.0 / t * ratio
        }
    }
}

/// Finds θ with `kendall_tau(θ) = tau`. AMH targets above 1/3 are truncated
/// to θ = 1 and flagged.
pub fn tau_inverse(family: CopulaFamily, tau: f64) -> Result<TauInversion> {
    let (lo, hi) = family.tau_range();
    let unattainable = || Error::UnattainableTau { family: family.to_string(), tau, lo, hi };
    if !tau.is_finite() {
        return Err(unattainable());
    }
    let exact = |theta: f64| -> Result<TauInversion> {
        Ok(TauInversion { copula: Copula::new(family, theta)?, clamped: false })
    };
    match family {
        CopulaFamily::Amh => {
            if tau > hi {
                log::warn!("tau = {tau} exceeds the AMH maximum 1/3; truncating to theta = 1");
                return Ok(TauInversion { copula: Copula::new(family, 1.0)?, clamped: true });
            }
            if tau < lo {
                return Err(unattainable());
            }
            if tau == hi {
                return exact(1.0);
            }
            if tau == lo {
                return exact(-1.0);
            }
            exact(solve_tau(family, tau, -1.0, 1.0)?)
        }
        CopulaFamily::Clayton => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(unattainable());
            }
            exact(2.0 * tau / (1.0 - tau))
        }
        CopulaFamily::Gumbel => {
            if !(0.0..1.0).contains(&tau) {
                return Err(unattainable());
            }
            exact(1.0 / (1.0 - tau))
        }
        CopulaFamily::Frank => {
            if !(tau > -1.0 && tau < 1.0) {
                return Err(unattainable());
            }
            if tau == 0.0 {
                return exact(0.0);
            }
            let mut b: f64 = 1.0;
            while kendall_tau(family, b.copysign(tau)).abs() < tau.abs() {
                b *= 2.0;
                if b > 1e6 {
                    return Err(unattainable());
                }
            }
            let (a, b) = if tau > 0.0 { (0.0, b) } else { (-b, 0.0) };
            exact(solve_tau(family, tau, a, b)?)
        }
        CopulaFamily::Joe => {
            if !(0.0..1.0).contains(&tau) {
                return Err(unattainable());
            }
            if tau == 0.0 {
                return exact(1.0);
            }
            let mut b = 2.0;
            while kendall_tau(family, b) < tau {
                b *= 2.0;
                if b > 1e6 {
                    return Err(unattainable());
                }
            }
            exact(solve_tau(family, tau, 1.0, b)?)
        }
    }
}

fn solve_tau(family: CopulaFamily, tau: f64, a: f64, b: f64) -> Result<f64> {
    let root = roots::brent(|t| kendall_tau(family, t) - tau, a, b, 1e-15, 4.0 * f64::EPSILON, f64::INFINITY, 500)?;
    Ok(root.x)
}
