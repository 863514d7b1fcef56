//! Baseline hazard models: Weibull, exponentiated Weibull (generation only),
//! Bernstein polynomial and piecewise exponential.
//!
//! Every model is described by its cumulative hazard `H` and hazard `h`; the
//! survival `S = exp(-H)`, density `f = h S`, odds `R = exp(H) - 1` and odds
//! derivative `r = h exp(H)` follow from those two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    /// Shape.
    pub alpha: f64,
    /// Scale (rate): `H(t) = lambda * t^alpha`.
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpWeibullParams {
    pub alpha: f64,
    pub lambda: f64,
    /// Exponentiation parameter: `F(t) = [1 - exp(-lambda t^alpha)]^xi`.
    pub xi: f64,
}

/// Bernstein-polynomial cumulative hazard of degree `gamma.len()` on `[0, upsilon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinParams {
    pub gamma: Vec<f64>,
    pub upsilon: f64,
}

/// Piecewise-constant hazard. `grid` holds the cut points `e_1 < ... < e_p`
/// (with `e_0 = 0` implicit); the last rate also applies beyond `e_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseParams {
    pub rates: Vec<f64>,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Baseline {
    Weibull(WeibullParams),
    ExpWeibull(ExpWeibullParams),
    Bernstein(BernsteinParams),
    Piecewise(PiecewiseParams),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} must be positive and finite")))
    }
}

impl Baseline {
    pub fn weibull(alpha: f64, lambda: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("lambda", lambda)?;
        Ok(Baseline::Weibull(WeibullParams { alpha, lambda }))
    }

    pub fn exp_weibull(alpha: f64, lambda: f64, xi: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("lambda", lambda)?;
        positive("xi", xi)?;
        Ok(Baseline::ExpWeibull(ExpWeibullParams { alpha, lambda, xi }))
    }

    pub fn bernstein(gamma: Vec<f64>, upsilon: f64) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::domain("Bernstein degree must be at least 1"));
        }
        for &g in &gamma {
            positive("gamma_k", g)?;
        }
        positive("upsilon", upsilon)?;
        Ok(Baseline::Bernstein(BernsteinParams { gamma, upsilon }))
    }

    pub fn piecewise(rates: Vec<f64>, grid: Vec<f64>) -> Result<Self> {
        if rates.is_empty() || rates.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len().max(1), got: rates.len() });
        }
        for &r in &rates {
            positive("lambda_k", r)?;
        }
        let mut prev = 0.0;
        for &e in &grid {
            if !(e > prev) || !e.is_finite() {
                return Err(Error::domain("piecewise grid must be positive and strictly increasing"));
            }
            prev = e;
        }
        Ok(Baseline::Piecewise(PiecewiseParams { rates, grid }))
    }

    /// Exponential baseline with constant hazard `rate`.
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::weibull(1.0, rate)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || t.is_nan() {
            return Err(Error::domain(format!("time {t} must be strictly positive")));
        }
        if let Baseline::Bernstein(bp) = self {
            if t > bp.upsilon {
                return Err(Error::Horizon { t, upsilon: bp.upsilon });
            }
        }
        Ok(())
    }

    pub fn hazard(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.hazard_unchecked(t))
    }

    pub fn cum_hazard(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.cum_hazard_unchecked(t))
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        Ok((-self.cum_hazard(t)?).exp())
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.hazard_unchecked(t) * (-self.cum_hazard_unchecked(t)).exp())
    }

    pub fn odds(&self, t: f64) -> Result<f64> {
        Ok(self.cum_hazard(t)?.exp_m1())
    }

    pub fn odds_deriv(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.hazard_unchecked(t) * self.cum_hazard_unchecked(t).exp())
    }

    pub(crate) fn hazard_unchecked(&self, t: f64) -> f64 {
        match self {
            Baseline::Weibull(w) => w.lambda * w.alpha * t.powf(w.alpha - 1.0),
            Baseline::ExpWeibull(p) => {
                // h = f / S with S = 1 - G^xi, G = 1 - exp(-lambda t^alpha)
                let z = p.lambda * t.powf(p.alpha);
                let log_g = (-(-z).exp_m1()).ln();
                let surv = -(p.xi * log_g).exp_m1();
                let weibull_h = p.lambda * p.alpha * t.powf(p.alpha - 1.0);
                if surv > 0.0 {
                    let log_f = p.xi.ln() + (p.xi - 1.0) * log_g - z;
                    weibull_h * (log_f - surv.ln()).exp()
                } else {
                    // far tail: S ~ xi exp(-z)
                    weibull_h
                }
            }
            Baseline::Bernstein(bp) => {
                let (g, _) = bernstein_basis_unchecked(bp.gamma.len(), bp.upsilon, t);
                bp.gamma.iter().zip(&g).map(|(a, b)| a * b).sum()
            }
            Baseline::Piecewise(pe) => pe.rates[pe.interval(t)],
        }
    }

    pub(crate) fn cum_hazard_unchecked(&self, t: f64) -> f64 {
        match self {
            Baseline::Weibull(w) => w.lambda * t.powf(w.alpha),
            Baseline::ExpWeibull(p) => {
                let z = p.lambda * t.powf(p.alpha);
                let log_g = (-(-z).exp_m1()).ln();
                let f = (p.xi * log_g).exp();
                if f < 0.5 {
                    -(-f).ln_1p()
                } else {
                    // S = 1 - G^xi computed without cancellation
                    -(-(p.xi * log_g).exp_m1()).ln()
                }
            }
            Baseline::Bernstein(bp) => {
                let (_, big_g) = bernstein_basis_unchecked(bp.gamma.len(), bp.upsilon, t);
                bp.gamma.iter().zip(&big_g).map(|(a, b)| a * b).sum()
            }
            Baseline::Piecewise(pe) => pe.cum_hazard(t),
        }
    }

    /// Solves `H(t) = h` for `t`.
    pub fn cum_hazard_inverse(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(Error::domain(format!("cumulative hazard {h} must be >= 0")));
        }
        if h == 0.0 {
            return Ok(0.0);
        }
        match self {
            Baseline::Weibull(w) => Ok((h / w.lambda).powf(1.0 / w.alpha)),
            Baseline::ExpWeibull(p) => {
                // F = 1 - exp(-h); G = F^{1/xi}; lambda t^alpha = -ln(1 - G)
                let log_f = (-(-h).exp_m1()).ln();
                let g = (log_f / p.xi).exp();
                let z = -(-g).ln_1p();
                Ok((z / p.lambda).powf(1.0 / p.alpha))
            }
            Baseline::Piecewise(pe) => Ok(pe.cum_hazard_inverse(h)),
            Baseline::Bernstein(bp) => {
                let total: f64 = bp.gamma.iter().sum();
                if h > total {
                    return Err(Error::Horizon { t: f64::INFINITY, upsilon: bp.upsilon });
                }
                if h == total {
                    return Ok(bp.upsilon);
                }
                let r = roots::brent(
                    |t| self.cum_hazard_unchecked(t) - h,
                    0.0,
                    bp.upsilon,
                    1e-15,
                    1e-13,
                    1e-13 * h.max(1e-300),
                    300,
                )?;
                Ok(r.x)
            }
        }
    }

    /// Number of free baseline parameters.
    pub fn n_params(&self) -> usize {
        match self {
            Baseline::Weibull(_) => 2,
            Baseline::ExpWeibull(_) => 3,
            Baseline::Bernstein(bp) => bp.gamma.len(),
            Baseline::Piecewise(pe) => pe.rates.len(),
        }
    }
}

impl PiecewiseParams {
    /// Index of the interval `(e_{k-1}, e_k]` containing `t`; times beyond the
    /// last cut point map to the final interval.
    pub fn interval(&self, t: f64) -> usize {
        let k = self.grid.partition_point(|&e| e < t);
        k.min(self.rates.len() - 1)
    }

    pub fn cum_hazard(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut prev = 0.0;
        let last = self.rates.len() - 1;
        for (k, (&rate, &e)) in self.rates.iter().zip(&self.grid).enumerate() {
            let right = if k == last { t } else { e.min(t) };
            if right > prev {
                acc += rate * (right - prev);
            }
            if t <= e {
                break;
            }
            prev = e;
        }
        acc
    }

    fn cum_hazard_inverse(&self, h: f64) -> f64 {
        let mut acc = 0.0;
        let mut prev = 0.0;
        let last = self.rates.len() - 1;
        for (k, (&rate, &e)) in self.rates.iter().zip(&self.grid).enumerate() {
            let seg = rate * (e - prev);
            if k == last || acc + seg >= h {
                return prev + (h - acc) / rate;
            }
            acc += seg;
            prev = e;
        }
        unreachable!("piecewise model has at least one interval")
    }
}

/// Bernstein basis at `t`: densities `g_k(t) = f_B(t/υ; k, m-k+1)/υ` and their
/// integrals `G_k(t)` (regularized incomplete Beta at `t/υ`), `k = 1..m`.
pub fn bernstein_basis(m: usize, upsilon: f64, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::domain("Bernstein degree must be at least 1"));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time {t} must be >= 0")));
    }
    if t > upsilon {
        return Err(Error::Horizon { t, upsilon });
    }
    Ok(bernstein_basis_unchecked(m, upsilon, t))
}

pub(crate) fn bernstein_basis_unchecked(m: usize, upsilon: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
    let x = (t / upsilon).clamp(0.0, 1.0);
    // binomial pmf b_j = C(m, j) x^j (1-x)^(m-j), j = 0..m
    let pmf = binomial_pmf(m, x);
    // G_k = P(Bin(m, x) >= k)
    let mut big_g = vec![0.0; m];
    let mut tail = 0.0;
    for k in (1..=m).rev() {
        tail += pmf[k];
        big_g[k - 1] = tail.min(1.0);
    }
    // g_k = m * C(m-1, k-1) x^(k-1) (1-x)^(m-k) / υ = m * pmf_{m-1}(k-1) / υ
    let pmf_lower = binomial_pmf(m - 1, x);
    let g = pmf_lower.iter().map(|p| m as f64 * p / upsilon).collect();
    (g, big_g)
}

fn binomial_pmf(m: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    if x <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x >= 1.0 {
        out[m] = 1.0;
        return out;
    }
    let lx = x.ln();
    let l1x = (-x).ln_1p();
    let mut log_choose = 0.0;
    for j in 0..=m {
        if j > 0 {
            log_choose += ((m - j + 1) as f64).ln() - (j as f64).ln();
        }
        out[j] = (log_choose + j as f64 * lx + (m - j) as f64 * l1x).exp();
    }
    out
}

/// Structural size `⌈n^{2/5}⌉` used for the Bernstein degree and the number
/// of piecewise intervals. Computed exactly as the least `m` with `m^5 >= n^2`.
pub fn structural_size(n: usize) -> usize {
    let n2 = (n as u128) * (n as u128);
    let mut m = (n as f64).powf(0.4).floor().max(1.0) as u128;
    while m.pow(5) < n2 {
        m += 1;
    }
    while m > 1 && (m - 1).pow(5) >= n2 {
        m -= 1;
    }
    m as usize
}

/// Cut points at empirical quantiles of `event_times`, `p` intervals. The last
/// cut point is the largest event time; duplicates are dropped.
pub fn quantile_grid(event_times: &[f64], p: usize) -> Result<Vec<f64>> {
    if event_times.is_empty() {
        return Err(Error::InvalidData("no event times to place a piecewise grid".into()));
    }
    let mut sorted = event_times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = (1..=p)
        .map(|k| crate::special::quantile_sorted(&sorted, k as f64 / p as f64))
        .collect();
    grid.dedup_by(|a, b| *a <= *b);
    if grid[0] <= 0.0 {
        return Err(Error::InvalidData("event times must be positive".into()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::distribution::{Beta, Continuous};

    #[test]
    fn weibull_examples() {
        let e = Baseline::weibull(1.0, 1.0).unwrap();
        assert_eq!(e.hazard(0.3).unwrap(), 1.0);
        assert_eq!(e.hazard(17.0).unwrap(), 1.0);
        assert_relative_eq!(e.survival(1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        let w = Baseline::weibull(1.2, 0.8).unwrap();
        assert_relative_eq!(w.cum_hazard(1.0).unwrap(), 0.8, epsilon = 1e-15);
        let w2 = Baseline::weibull(2.0, 1.0).unwrap();
        assert_relative_eq!(w2.cum_hazard_inverse(4.0).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn piecewise_examples() {
        let pe = Baseline::piecewise(vec![0.5, 2.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(pe.hazard(2.5).unwrap(), 2.0);
        assert_eq!(pe.hazard(1.0).unwrap(), 0.5);
        assert_eq!(pe.hazard(5.0).unwrap(), 2.0);
        assert_relative_eq!(pe.cum_hazard_inverse(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(pe.cum_hazard(2.0).unwrap(), 0.5 + 2.0, epsilon = 1e-15);
        assert_relative_eq!(pe.cum_hazard(4.0).unwrap(), 0.5 + 4.0 + 2.0, epsilon = 1e-15);
        let unit = Baseline::piecewise(vec![1.0; 3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(unit.cum_hazard(3.0).unwrap(), 3.0, epsilon = 1e-15);
        for &h in &[0.1, 0.5, 2.49, 2.5, 7.0] {
            let t = pe.cum_hazard_inverse(h).unwrap();
            assert_relative_eq!(pe.cum_hazard(t).unwrap(), h, max_relative = 1e-12);
        }
    }

    #[test]
    fn piecewise_single_interval_is_exponential() {
        let pe = Baseline::piecewise(vec![0.7], vec![2.0]).unwrap();
        let ex = Baseline::exponential(0.7).unwrap();
        for &t in &[0.1, 1.0, 2.0, 6.5] {
            assert_relative_eq!(pe.cum_hazard(t).unwrap(), ex.cum_hazard(t).unwrap(), epsilon = 1e-14);
            assert_eq!(pe.hazard(t).unwrap(), 0.7);
        }
    }

    #[test]
    fn bernstein_basis_examples() {
        let (_, g0) = bernstein_basis(4, 2.0, 0.0).unwrap();
        assert!(g0.iter().all(|&v| v == 0.0));
        let (_, g1) = bernstein_basis(4, 2.0, 2.0).unwrap();
        assert!(g1.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let (_, g) = bernstein_basis(3, 2.0, 1.0).unwrap();
        assert_relative_eq!(g[1], 0.5, epsilon = 1e-15);
        assert!(matches!(bernstein_basis(3, 2.0, 2.5), Err(Error::Horizon { .. })));
    }

    #[test]
    fn bernstein_density_matches_beta_pdf() {
        let (m, ups) = (5usize, 3.0);
        for &t in &[0.2, 1.1, 2.7] {
            let (g, _) = bernstein_basis(m, ups, t).unwrap();
            for k in 1..=m {
                let beta = Beta::new(k as f64, (m - k + 1) as f64).unwrap();
                assert_relative_eq!(g[k - 1], beta.pdf(t / ups) / ups, max_relative = 1e-12);
            }
        }
        let bp = Baseline::bernstein(vec![1.0, 1.0], 1.0).unwrap();
        let b1 = Beta::new(1.0, 2.0).unwrap().pdf(0.5);
        let b2 = Beta::new(2.0, 1.0).unwrap().pdf(0.5);
        assert_relative_eq!(bp.hazard(0.5).unwrap(), b1 + b2, epsilon = 1e-14);
    }

    #[test]
    fn bernstein_full_horizon_and_exponential_reduction() {
        let bp = Baseline::bernstein(vec![0.3, 1.2, 0.8], 2.5).unwrap();
        assert_relative_eq!(bp.cum_hazard(2.5).unwrap(), 2.3, epsilon = 1e-14);
        assert!(matches!(bp.hazard(2.6), Err(Error::Horizon { .. })));
        let one = Baseline::bernstein(vec![1.5], 3.0).unwrap();
        for &t in &[0.1, 1.0, 2.9] {
            assert_relative_eq!(one.hazard(t).unwrap(), 0.5, epsilon = 1e-14);
        }
        for &t in &[0.05, 0.7, 1.9, 2.45] {
            let h = bp.cum_hazard(t).unwrap();
            assert_relative_eq!(bp.cum_hazard_inverse(h).unwrap(), t, epsilon = 1e-8);
        }
        assert!(bp.cum_hazard_inverse(2.4).is_err());
    }

    #[test]
    fn exp_weibull_survival_closed_form() {
        let ew = Baseline::exp_weibull(2.1, 0.5, 0.3).unwrap();
        let expected = 1.0 - (1.0 - (-0.5f64).exp()).powf(0.3);
        assert_relative_eq!(ew.survival(1.0).unwrap(), expected, epsilon = 1e-14);
        for &h in &[0.01, 0.3, 2.0, 9.0] {
            let t = ew.cum_hazard_inverse(h).unwrap();
            assert_relative_eq!(ew.cum_hazard(t).unwrap(), h, max_relative = 1e-10);
        }
    }

    #[test]
    fn structural_size_examples() {
        assert_eq!(structural_size(1), 1);
        assert_eq!(structural_size(32), 4);
        // 500^{0.4} = 12.011...
        assert_eq!(structural_size(500), 13);
        assert_eq!(structural_size(508), 13);
        for n in 1..3000usize {
            let m = structural_size(n);
            assert!((m as f64).powi(5) >= (n as f64).powi(2));
            assert!(m == 1 || ((m - 1) as f64).powi(5) < (n as f64).powi(2));
        }
    }

    #[test]
    fn invalid_times_rejected() {
        let w = Baseline::weibull(0.5, 1.0).unwrap();
        assert!(w.hazard(0.0).is_err());
        assert!(w.cum_hazard(-1.0).is_err());
        assert!(Baseline::weibull(-1.0, 1.0).is_err());
        assert!(Baseline::piecewise(vec![1.0, 1.0], vec![2.0, 1.0]).is_err());
        assert!(Baseline::bernstein(vec![1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn quantile_grid_places_last_cut_at_max() {
        let times: Vec<f64> = (1..=100).map(|i| i as f64 / 10.0).collect();
        let g = quantile_grid(&times, 4).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
