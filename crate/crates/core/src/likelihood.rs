//! Bivariate censored log-likelihood of the survival copula model.
//!
//! With `u_j = S_j(y_j | x_j)` the joint survival is `C(u1, u2)`, and a
//! cluster contributes `C`, `∂C/∂u1 f1`, `∂C/∂u2 f2` or `c f1 f2` depending
//! on which of its two times are events.

use crate::baseline::bernstein_basis_unchecked;
use crate::copula::Copula;
use crate::data::{BivariateData, MarginData};
use crate::error::{Error, Result};
use crate::model::{MarginParams, MarginStructure, Model, ParamSet};
use crate::regression::{yp_log_terms, RegressionClass};

/// Survival values are clamped into `[U_MIN, 1 - U_MIN]` before the copula
/// is evaluated.
pub const U_MIN: f64 = 1e-15;

/// Log-likelihood value together with the number of clamped survival values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loglik: f64,
    pub clamped: usize,
}

#[inline]
fn clamp_u(ln_s: f64, clamped: &mut usize) -> f64 {
    let u = ln_s.exp();
    if u < U_MIN {
        *clamped += 1;
        U_MIN
    } else if u > 1.0 - U_MIN {
        *clamped += 1;
        1.0 - U_MIN
    } else {
        u
    }
}

/// Log contribution of one cluster from the marginal log survivals and log
/// hazards at its observed times.
#[inline]
pub(crate) fn cluster_value(copula: &Copula, m1: (f64, f64, bool), m2: (f64, f64, bool), clamped: &mut usize) -> f64 {
    let (ls1, lh1, d1) = m1;
    let (ls2, lh2, d2) = m2;
    let u1 = clamp_u(ls1, clamped);
    let u2 = clamp_u(ls2, clamped);
    match (d1, d2) {
        (false, false) => copula.log_cdf2(u1, u2),
        (true, false) => copula.log_h(u1, u2) + ls1 + lh1,
        (false, true) => copula.log_h(u2, u1) + ls2 + lh2,
        (true, true) => copula.log_density(u1, u2) + ls1 + lh1 + ls2 + lh2,
    }
}

/// Log-likelihood contribution of cluster `i`.
pub fn cluster_loglik(model: &Model, params: &ParamSet, data: &BivariateData, i: usize) -> Result<f64> {
    if i >= data.n() {
        return Err(Error::InvalidInput(format!("cluster {i} out of range")));
    }
    let copula = model.copula(params)?;
    let mut terms = [(0.0, 0.0, false); 2];
    for (j, term) in terms.iter_mut().enumerate() {
        let mm = model.margin_model(params, j)?;
        let md = data.margin(j);
        let (y, x) = (md.y[i], md.row(i));
        let ls = mm.log_survival(x, y)?;
        let lh = mm.hazard(x, y)?.ln();
        *term = (ls, lh, md.delta[i]);
    }
    let v = cluster_value(&copula, terms[0], terms[1], &mut 0);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { cluster: i })
    }
}

/// Sum of the cluster contributions in index order.
pub fn total_loglik(model: &Model, params: &ParamSet, data: &BivariateData) -> Result<f64> {
    Ok(Prepared::new(model, data)?.evaluate(params)?.loglik)
}

/// Parameter-free per-observation quantities of a margin's baseline.
#[derive(Debug, Clone)]
enum Basis {
    Weibull { ln_y: Vec<f64> },
    /// Row-major `n x m` basis values `g_k(y_i)` and `G_k(y_i)`.
    Bernstein { m: usize, g: Vec<f64>, big_g: Vec<f64> },
    /// Row-major `n x p` time at risk per interval, and the interval holding `y_i`.
    Piecewise { p: usize, exposure: Vec<f64>, interval: Vec<usize> },
}

#[derive(Debug, Clone)]
struct PreparedMargin {
    delta: Vec<bool>,
    x: Vec<f64>,
    q: usize,
    basis: Basis,
}

impl PreparedMargin {
    fn new(structure: &MarginStructure, m: &MarginData) -> Result<Self> {
        let n = m.len();
        let basis = match structure {
            MarginStructure::Weibull => Basis::Weibull { ln_y: m.y.iter().map(|y| y.ln()).collect() },
            MarginStructure::Bernstein { degree, upsilon } => {
                let mut g = Vec::with_capacity(n * degree);
                let mut big_g = Vec::with_capacity(n * degree);
                for &y in &m.y {
                    if y > *upsilon {
                        return Err(Error::Horizon { t: y, upsilon: *upsilon });
                    }
                    let (a, b) = bernstein_basis_unchecked(*degree, *upsilon, y);
                    g.extend(a);
                    big_g.extend(b);
                }
                Basis::Bernstein { m: *degree, g, big_g }
            }
            MarginStructure::Piecewise { grid } => {
                let p = grid.len();
                let mut exposure = vec![0.0; n * p];
                let mut interval = Vec::with_capacity(n);
                for (i, &y) in m.y.iter().enumerate() {
                    let mut prev = 0.0;
                    for (k, &e) in grid.iter().enumerate() {
                        let right = if k == p - 1 { y } else { e.min(y) };
                        exposure[i * p + k] = (right - prev).max(0.0);
                        prev = e;
                    }
                    interval.push(grid.partition_point(|&e| e < y).min(p - 1));
                }
                Basis::Piecewise { p, exposure, interval }
            }
        };
        Ok(PreparedMargin { delta: m.delta.clone(), x: m.x.clone(), q: m.q, basis })
    }

    /// Per-observation `(ln S, ln h)` under `mp`, written into `out`.
    fn log_terms(&self, class: RegressionClass, mp: &MarginParams, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let n = self.delta.len();
        let q = self.q;
        let kappa = &mp.kappa;
        let ln_kappa: Vec<f64> = kappa.iter().map(|k| k.ln()).collect();
        for i in 0..n {
            let row = &self.x[i * q..(i + 1) * q];
            let ls: f64 = row.iter().zip(&mp.beta_short).map(|(a, b)| a * b).sum();
            let ll = match class {
                RegressionClass::Ph => ls,
                RegressionClass::Po => 0.0,
                RegressionClass::Yp => row.iter().zip(&mp.beta_long).map(|(a, b)| a * b).sum(),
            };
            let (h0, ln_h0) = match &self.basis {
                Basis::Weibull { ln_y } => {
                    let (alpha, lambda) = (kappa[0], kappa[1]);
                    let ly = ln_y[i];
                    (lambda * (alpha * ly).exp(), ln_kappa[1] + ln_kappa[0] + (alpha - 1.0) * ly)
                }
                Basis::Bernstein { m, g, big_g } => {
                    let gi = &g[i * m..(i + 1) * m];
                    let big = &big_g[i * m..(i + 1) * m];
                    let h: f64 = kappa.iter().zip(gi).map(|(a, b)| a * b).sum();
                    let cum: f64 = kappa.iter().zip(big).map(|(a, b)| a * b).sum();
                    (cum, h.ln())
                }
                Basis::Piecewise { p, exposure, interval } => {
                    let ex = &exposure[i * p..(i + 1) * p];
                    let cum: f64 = kappa.iter().zip(ex).map(|(a, b)| a * b).sum();
                    (cum, ln_kappa[interval[i]])
                }
            };
            out.push(yp_log_terms(ls, ll, h0, ln_h0));
        }
    }
}

/// Dataset and model with the parameter-free parts of the likelihood
/// precomputed, for repeated evaluation inside the optimizer.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    model: &'a Model,
    margins: [PreparedMargin; 2],
}

impl<'a> Prepared<'a> {
    pub fn new(model: &'a Model, data: &BivariateData) -> Result<Self> {
        for j in 0..2 {
            if data.margin(j).q != model.n_covariates[j] {
                return Err(Error::Dimension { expected: model.n_covariates[j], got: data.margin(j).q });
            }
        }
        Ok(Prepared {
            model,
            margins: [
                PreparedMargin::new(&model.structure[0], data.margin(0))?,
                PreparedMargin::new(&model.structure[1], data.margin(1))?,
            ],
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn n(&self) -> usize {
        self.margins[0].delta.len()
    }

    pub fn evaluate(&self, params: &ParamSet) -> Result<Evaluation> {
        self.model.validate(params)?;
        self.evaluate_unchecked(params)
    }

    /// Log-likelihood at a packed parameter vector.
    pub fn evaluate_packed(&self, z: &[f64]) -> Result<Evaluation> {
        let p = self.model.unpack(z)?;
        self.evaluate(&p)
    }

    fn evaluate_unchecked(&self, params: &ParamSet) -> Result<Evaluation> {
        let copula = self.model.copula(params)?;
        let class = self.model.spec.class;
        let mut t1 = Vec::with_capacity(self.n());
        let mut t2 = Vec::with_capacity(self.n());
        self.margins[0].log_terms(class, &params.margins[0], &mut t1);
        self.margins[1].log_terms(class, &params.margins[1], &mut t2);
        let (d1, d2) = (&self.margins[0].delta, &self.margins[1].delta);
        let mut clamped = 0;
        let mut acc = 0.0;
        for i in 0..self.n() {
            let v = cluster_value(&copula, (t1[i].0, t1[i].1, d1[i]), (t2[i].0, t2[i].1, d2[i]), &mut clamped);
            if !v.is_finite() {
                return Err(Error::NonFinite { cluster: i });
            }
            acc += v;
        }
        Ok(Evaluation { loglik: acc, clamped })
    }

    /// Univariate censored log-likelihood of margin `j`, ignoring the copula.
    pub fn margin_loglik(&self, j: usize, mp: &MarginParams) -> f64 {
        let pm = &self.margins[j];
        let mut t = Vec::with_capacity(self.n());
        pm.log_terms(self.model.spec.class, mp, &mut t);
        t.iter().zip(&pm.delta).map(|(&(ls, lh), &d)| if d { ls + lh } else { ls }).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::CopulaFamily;
    use crate::model::{BaselineKind, ModelSpec};
    use crate::regression::MarginModel;
    use approx::assert_relative_eq;

    fn data() -> BivariateData {
        let y1 = vec![0.5, 1.2, 2.0, 0.3, 0.9, 1.7, 0.2, 2.6];
        let y2 = vec![0.7, 0.4, 1.5, 2.2, 1.1, 0.6, 1.9, 0.8];
        let d1 = vec![true, false, true, false, true, true, false, true];
        let d2 = vec![true, true, false, false, false, true, true, true];
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![(i % 2) as f64, 0.3 * i as f64 - 1.0]).collect();
        let names = vec!["a".to_string(), "b".to_string()];
        BivariateData::new(
            (0..8).map(|i| i.to_string()).collect(),
            MarginData::new(y1, d1, &rows, names.clone()).unwrap(),
            MarginData::new(y2, d2, &rows, names).unwrap(),
        )
        .unwrap()
    }

    fn params(model: &Model, theta: f64) -> ParamSet {
        let n = model.n_params();
        let mut v: Vec<f64> = (0..n).map(|k| 0.6 + 0.05 * k as f64).collect();
        v[0] = theta;
        // coefficients can be negative
        let names = model.param_names();
        for (k, name) in names.iter().enumerate() {
            if name.starts_with("beta") && k % 2 == 0 {
                v[k] = -v[k];
            }
        }
        model.assemble(&v).unwrap()
    }

    #[test]
    fn prepared_matches_generic_path() {
        let d = data();
        for baseline in BaselineKind::ALL {
            for class in RegressionClass::ALL {
                let mut spec = ModelSpec::new(CopulaFamily::Gumbel, baseline, class);
                spec.size = Some(3);
                let model = Model::resolve(spec, &d).unwrap();
                let p = params(&model, 1.8);
                let fast = total_loglik(&model, &p, &d).unwrap();
                let slow: f64 = (0..d.n()).map(|i| cluster_loglik(&model, &p, &d, i).unwrap()).sum();
                assert_relative_eq!(fast, slow, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn independence_factorizes() {
        let d = data();
        for baseline in BaselineKind::ALL {
            let mut spec = ModelSpec::new(CopulaFamily::Frank, baseline, RegressionClass::Yp);
            spec.size = Some(3);
            let model = Model::resolve(spec, &d).unwrap();
            let p = params(&model, 0.0);
            let joint = total_loglik(&model, &p, &d).unwrap();
            let mut marg = 0.0;
            for j in 0..2 {
                let mm: MarginModel = model.margin_model(&p, j).unwrap();
                let md = d.margin(j);
                let rows: Vec<Vec<f64>> = (0..d.n()).map(|i| md.row(i).to_vec()).collect();
                marg += mm.log_likelihood(&md.y, &md.delta, &rows).unwrap();
            }
            assert_relative_eq!(joint, marg, epsilon = 1e-8);
        }
    }

    #[test]
    fn empty_prefix_and_single_cluster() {
        let d = data();
        let model =
            Model::resolve(ModelSpec::new(CopulaFamily::Clayton, BaselineKind::Weibull, RegressionClass::Yp), &d)
                .unwrap();
        let p = params(&model, 2.0);
        let one = d.resample(&[3]);
        assert_relative_eq!(
            total_loglik(&model, &p, &one).unwrap(),
            cluster_loglik(&model, &p, &d, 3).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn censoring_switch_drops_density_factor() {
        // Turning an event into a censoring at the same time removes f and
        // replaces the density of the copula by a partial.
        let d = data();
        let model =
            Model::resolve(ModelSpec::new(CopulaFamily::Joe, BaselineKind::Weibull, RegressionClass::Po), &d).unwrap();
        let p = params(&model, 1.7);
        let mut censored = d.clone();
        censored.margins[0].delta[0] = false;
        let a = cluster_loglik(&model, &p, &d, 0).unwrap();
        let b = cluster_loglik(&model, &p, &censored, 0).unwrap();
        let mm = model.margin_model(&p, 0).unwrap();
        let f1 = mm.density(d.margin(0).row(0), 0.5).unwrap().ln();
        let cop = model.copula(&p).unwrap();
        let u1 = mm.survival(d.margin(0).row(0), 0.5).unwrap();
        let u2 = model.margin_model(&p, 1).unwrap().survival(d.margin(1).row(0), 0.7).unwrap();
        let f2 = model.margin_model(&p, 1).unwrap().density(d.margin(1).row(0), 0.7).unwrap().ln();
        assert_relative_eq!(a, cop.log_density(u1, u2) + f1 + f2, max_relative = 1e-12);
        assert_relative_eq!(b, cop.log_h(u2, u1) + f2, max_relative = 1e-12);
    }

    #[test]
    fn piecewise_exposure_matches_baseline() {
        let d = data();
        let mut spec = ModelSpec::new(CopulaFamily::Amh, BaselineKind::Piecewise, RegressionClass::Ph);
        spec.size = Some(4);
        let model = Model::resolve(spec, &d).unwrap();
        let p = params(&model, 0.3);
        let prepared = Prepared::new(&model, &d).unwrap();
        let mut terms = Vec::new();
        prepared.margins[0].log_terms(RegressionClass::Ph, &p.margins[0], &mut terms);
        let mm = model.margin_model(&p, 0).unwrap();
        for i in 0..d.n() {
            let (y, x) = (d.margin(0).y[i], d.margin(0).row(i));
            assert_relative_eq!(terms[i].0, mm.log_survival(x, y).unwrap(), max_relative = 1e-13);
            assert_relative_eq!(terms[i].1, mm.hazard(x, y).unwrap().ln(), max_relative = 1e-13, epsilon = 1e-14);
        }
    }
}
