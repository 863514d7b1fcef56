//! Maximum-likelihood fitting, observed-information standard errors, AIC,
//! likelihood-ratio tests and Kendall's τ intervals.

use log::warn;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::copula::{kendall_tau, tau_inverse, CopulaFamily};
use crate::data::BivariateData;
use crate::error::{Error, Result};
use crate::likelihood::Prepared;
use crate::model::{Link, MarginParams, MarginStructure, Model, ModelSpec, ParamSet};
use crate::optim::{bfgs, bfgs_with_metric, fd_hessian, BfgsOptions, Minimum};
use crate::regression::RegressionClass;
use crate::special::{chi_square_upper_tail, kendall_tau_b, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Gradient max-norm at which the optimizer stops.
    pub grad_tol: f64,
    /// Relative log-likelihood change at which the optimizer stops.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Relative step of the finite-difference gradient.
    pub fd_step: f64,
    /// Relative step of the finite-difference Hessian.
    pub hessian_step: f64,
    /// Jittered restarts tried when the first run fails or pins θ to a boundary.
    pub restarts: usize,
    pub jitter: f64,
    pub seed: u64,
    /// Confidence level of the Wald intervals.
    pub level: f64,
    /// Skip the Hessian when only point estimates are needed.
    pub standard_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        let b = BfgsOptions::default();
        FitOptions {
            grad_tol: b.grad_tol,
            rel_tol: b.rel_tol,
            max_iter: b.max_iter,
            fd_step: b.fd_step,
            hessian_step: 1e-4,
            restarts: 3,
            jitter: 0.25,
            seed: 0x5eed,
            level: 0.95,
            standard_errors: true,
        }
    }
}

impl FitOptions {
    pub fn bfgs(&self) -> BfgsOptions {
        BfgsOptions {
            grad_tol: self.grad_tol,
            rel_tol: self.rel_tol,
            max_iter: self.max_iter,
            fd_step: self.fd_step,
            ..BfgsOptions::default()
        }
    }
}

/// A natural-scale estimate with its delta-method standard error and Wald
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub evaluations: usize,
    pub gradient_norm: f64,
    /// Survival values clamped at the optimum.
    pub clamped: usize,
    pub restarts: usize,
    pub singular_hessian: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub params: ParamSet,
    pub loglik: f64,
    pub packed: Vec<f64>,
    /// Covariance of the packed estimates; empty when standard errors were
    /// not requested.
    pub covariance: Vec<Vec<f64>>,
    pub packed_se: Vec<f64>,
    pub estimates: Vec<Estimate>,
    pub converged: bool,
    pub n_params: usize,
    pub n: usize,
    pub level: f64,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn aic(&self) -> f64 {
        aic(self)
    }
}

/// `2k - 2ℓ`.
pub fn aic(fit: &FitResult) -> f64 {
    2.0 * fit.n_params as f64 - 2.0 * fit.loglik
}

/// Resolves `spec` against `data` and fits it.
pub fn fit(data: &BivariateData, spec: ModelSpec, opts: &FitOptions) -> Result<FitResult> {
    let model = Model::resolve(spec, data)?;
    fit_model(data, &model, None, opts)
}

/// Fits `model` from `start`, or from the two-stage initial values when
/// `start` is `None`.
pub fn fit_model(data: &BivariateData, model: &Model, start: Option<&ParamSet>, opts: &FitOptions) -> Result<FitResult> {
    fit_inner(data, model, start, None, opts)
}

/// Refits `previous.model` on `data` (for instance a bootstrap resample),
/// starting at the previous estimates and using the previous covariance as
/// the initial inverse Hessian.
pub fn refit(data: &BivariateData, previous: &FitResult, opts: &FitOptions) -> Result<FitResult> {
    let metric = (!previous.covariance.is_empty() && !previous.diagnostics.singular_hessian)
        .then_some(previous.covariance.as_slice());
    fit_inner(data, &previous.model, Some(&previous.params), metric, opts)
}

fn fit_inner(
    data: &BivariateData,
    model: &Model,
    start: Option<&ParamSet>,
    metric: Option<&[Vec<f64>]>,
    opts: &FitOptions,
) -> Result<FitResult> {
    if data.n() == 0 {
        return Err(Error::InvalidData("cannot fit an empty dataset".into()));
    }
    let prepared = Prepared::new(model, data)?;
    let start = match start {
        Some(p) => coerce(model, p)?,
        None => initial_params(&prepared, data, &opts.bfgs())?,
    };
    let z0 = model.pack(&start)?;
    let objective = |z: &[f64]| match prepared.evaluate_packed(z) {
        Ok(e) => -e.loglik,
        Err(_) => f64::INFINITY,
    };
    let mut best = bfgs_with_metric(objective, &z0, metric, &opts.bfgs());
    let mut restarts = 0;
    if opts.restarts > 0 && (!best.converged || theta_pinned(model, best.x[0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let normal = Normal::new(0.0, opts.jitter.max(1e-12)).expect("positive jitter");
        for _ in 0..opts.restarts {
            restarts += 1;
            let zj: Vec<f64> = z0.iter().map(|v| v + normal.sample(&mut rng)).collect();
            let m = bfgs(objective, &zj, &opts.bfgs());
            if better(&m, &best) {
                best = m;
            }
            if best.converged && !theta_pinned(model, best.x[0]) {
                break;
            }
        }
    }
    if !best.fx.is_finite() {
        return Err(Error::InvalidData(format!("log-likelihood is not finite at the start of {}", model.spec.label())));
    }
    let params = model.unpack(&best.x)?;
    let eval = prepared.evaluate(&params)?;
    let mut diagnostics = Diagnostics {
        iterations: best.iterations,
        evaluations: best.evaluations,
        gradient_norm: best.grad_norm,
        clamped: eval.clamped,
        restarts,
        singular_hessian: false,
        message: best.message.to_string(),
    };
    let names = model.param_names();
    let natural = model.flatten(&params)?;
    let links = model.links();
    let (covariance, packed_se) = if opts.standard_errors {
        let h = fd_hessian(&objective, &best.x, opts.hessian_step);
        let (cov, singular) = invert_information(&h);
        diagnostics.singular_hessian = singular;
        let se = (0..cov.len()).map(|i| if cov[i][i] >= 0.0 { cov[i][i].sqrt() } else { f64::NAN }).collect();
        (cov, se)
    } else {
        (Vec::new(), vec![f64::NAN; natural.len()])
    };
    let zq = normal_quantile(0.5 + opts.level / 2.0);
    let estimates = names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let se = links[i].derivative(best.x[i]).abs() * packed_se[i];
            Estimate { name, value: natural[i], se, lower: natural[i] - zq * se, upper: natural[i] + zq * se }
        })
        .collect();
    Ok(FitResult {
        model: model.clone(),
        params,
        loglik: eval.loglik,
        packed: best.x,
        covariance,
        packed_se,
        estimates,
        converged: best.converged,
        n_params: model.n_params(),
        n: data.n(),
        level: opts.level,
        diagnostics,
    })
}

fn better(a: &Minimum, b: &Minimum) -> bool {
    match (a.converged, b.converged) {
        (true, false) => true,
        (false, true) => false,
        _ => a.fx < b.fx,
    }
}

/// θ driven to the edge of its parameter space by the optimizer.
fn theta_pinned(model: &Model, z: f64) -> bool {
    match model.theta_link() {
        Link::Log | Link::LogShifted => z < -12.0 || z > 6.0,
        Link::Atanh => z.abs() > 7.0,
        Link::Identity => z.abs() > 200.0,
    }
}

/// Adapts a parameter set from a nested or differently-structured fit to
/// `model`: θ is kept when the family matches; class ties are re-applied.
fn coerce(model: &Model, p: &ParamSet) -> Result<ParamSet> {
    let mut out = p.clone();
    for mp in out.margins.iter_mut() {
        match model.spec.class {
            RegressionClass::Ph => mp.beta_long = mp.beta_short.clone(),
            RegressionClass::Po => mp.beta_long.iter_mut().for_each(|b| *b = 0.0),
            RegressionClass::Yp => {}
        }
    }
    model.validate(&out)?;
    Ok(out)
}

/// Inverse of the observed information `H` (Hessian of the negative
/// log-likelihood), with a pseudo-inverse fallback.
fn invert_information(h: &[Vec<f64>]) -> (Vec<Vec<f64>>, bool) {
    let n = h.len();
    let nan = || (vec![vec![f64::NAN; n]; n], true);
    if h.iter().flatten().any(|v| !v.is_finite()) {
        warn!("observed information is not finite");
        return nan();
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (h[i][j] + h[j][i]));
    let (inv, singular) = match m.clone().cholesky() {
        Some(c) => (c.inverse(), false),
        None => {
            warn!("observed information is not positive definite; using a pseudo-inverse");
            match m.pseudo_inverse(1e-12) {
                Ok(p) => (p, true),
                Err(_) => return nan(),
            }
        }
    };
    ((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect(), singular)
}

/// Observed information (negative Hessian of the log-likelihood in packed
/// coordinates) at `fit`.
pub fn observed_information(fit: &FitResult, data: &BivariateData, step: f64) -> Result<Vec<Vec<f64>>> {
    let prepared = Prepared::new(&fit.model, data)?;
    let f = |z: &[f64]| prepared.evaluate_packed(z).map(|e| -e.loglik).unwrap_or(f64::INFINITY);
    Ok(fd_hessian(&f, &fit.packed, step))
}

/// Natural-scale Wald intervals at `level`.
pub fn wald_intervals(fit: &FitResult, level: f64) -> Vec<(f64, f64)> {
    let zq = normal_quantile(0.5 + level / 2.0);
    fit.estimates.iter().map(|e| (e.value - zq * e.se, e.value + zq * e.se)).collect()
}

fn margin_start(structure: &MarginStructure, data: &crate::data::MarginData) -> Vec<f64> {
    let events = data.events().max(1) as f64;
    let exposure: f64 = data.y.iter().sum();
    let rate = events / exposure;
    match structure {
        MarginStructure::Weibull => vec![1.0, rate],
        MarginStructure::Bernstein { degree, upsilon } => vec![rate * upsilon / *degree as f64; *degree],
        MarginStructure::Piecewise { grid } => vec![rate; grid.len()],
    }
}

/// Two-stage starting values: independent marginal fits, then θ from the
/// empirical Kendall τ of the clusters with both events observed.
pub fn initial_params(prepared: &Prepared<'_>, data: &BivariateData, opts: &BfgsOptions) -> Result<ParamSet> {
    let model = prepared.model();
    let class = model.spec.class;
    let mut margins = Vec::with_capacity(2);
    for j in 0..2 {
        let q = model.n_covariates[j];
        let kappa0 = margin_start(&model.structure[j], data.margin(j));
        let nk = kappa0.len();
        let nb = class.n_coefficients(q);
        let unpack = |z: &[f64]| {
            let kappa = z[..nk].iter().map(|v| v.exp()).collect();
            let beta_short = z[nk..nk + q].to_vec();
            let beta_long = match class {
                RegressionClass::Ph => beta_short.clone(),
                RegressionClass::Po => vec![0.0; q],
                RegressionClass::Yp => z[nk + q..].to_vec(),
            };
            MarginParams { kappa, beta_short, beta_long }
        };
        let mut z0: Vec<f64> = kappa0.iter().map(|v| v.ln()).collect();
        z0.extend(std::iter::repeat(0.0).take(nb));
        let f = |z: &[f64]| {
            if z.iter().any(|v| !v.is_finite() || v.abs() > 700.0) {
                return f64::INFINITY;
            }
            -prepared.margin_loglik(j, &unpack(z))
        };
        let m = bfgs(f, &z0, &BfgsOptions { grad_tol: 1e-4, rel_tol: 1e-9, ..*opts });
        let z = if m.fx.is_finite() { m.x } else { z0 };
        margins.push(unpack(&z));
    }
    let second = margins.pop().unwrap();
    let first = margins.pop().unwrap();
    let (a, b) = data.complete_pairs();
    let tau = if a.len() < 30 { 0.1 } else { kendall_tau_b(&a, &b) };
    let theta = start_theta(model.spec.copula, tau)?;
    Ok(ParamSet { theta, margins: [first, second] })
}

/// θ matching `tau`, pulled inside the family's attainable range.
fn start_theta(family: CopulaFamily, tau: f64) -> Result<f64> {
    let (lo, hi) = family.tau_range();
    let tau = if tau.is_finite() { tau } else { 0.1 };
    let tau = tau.clamp(lo + 0.01, hi - 0.01);
    Ok(tau_inverse(family, tau)?.copula.theta())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub stat: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Likelihood-ratio test of `reduced` (PH or PO) against `full` (YP) with the
/// same copula and baseline structure.
pub fn lr_test(reduced: &FitResult, full: &FitResult) -> Result<LrTest> {
    let (r, f) = (&reduced.model, &full.model);
    if r.spec.copula != f.spec.copula || r.structure != f.structure || r.n_covariates != f.n_covariates {
        return Err(Error::NotNested("copula or baseline structure differs".into()));
    }
    if f.spec.class != RegressionClass::Yp || r.spec.class == RegressionClass::Yp {
        return Err(Error::NotNested(format!("{} is not nested in {}", r.spec.class, f.spec.class)));
    }
    if reduced.n != full.n {
        return Err(Error::NotNested("fits use different datasets".into()));
    }
    let df = full.n_params.checked_sub(reduced.n_params).filter(|&d| d > 0).ok_or_else(|| {
        Error::NotNested("full model has no additional parameters".into())
    })?;
    let mut stat = 2.0 * (full.loglik - reduced.loglik);
    if stat < 0.0 {
        if stat < -1e-6 {
            warn!("negative likelihood-ratio statistic {stat}; the full fit did not reach the reduced optimum");
        }
        stat = 0.0;
    }
    Ok(LrTest { stat, df, p_value: chi_square_upper_tail(stat, df as f64) })
}

/// Fits the YP version of `reduced[0].model`, started from each reduced
/// optimum in turn, and returns the best fit.
pub fn fit_full_from_reduced(data: &BivariateData, reduced: &[&FitResult], opts: &FitOptions) -> Result<FitResult> {
    let first = reduced.first().ok_or_else(|| Error::InvalidInput("no reduced fit given".into()))?;
    let model = first.model.with_spec(first.model.spec.copula, RegressionClass::Yp);
    let mut best: Option<FitResult> = None;
    for r in reduced {
        let f = fit_model(data, &model, Some(&r.params), opts)?;
        let keep = match &best {
            None => true,
            Some(b) => (f.converged && !b.converged) || (f.converged == b.converged && f.loglik > b.loglik),
        };
        if keep {
            best = Some(f);
        }
    }
    Ok(best.expect("at least one reduced fit"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauEstimate {
    pub tau: f64,
    pub lower: f64,
    pub upper: f64,
    /// The θ interval was cut at the edge of the family's parameter space.
    pub clipped: bool,
}

/// Plug-in τ and the image of the link-scale θ Wald interval under τ(θ).
pub fn tau_with_interval(fit: &FitResult) -> TauEstimate {
    let family = fit.model.spec.copula;
    let link = fit.model.theta_link();
    let theta = fit.params.theta;
    let tau = kendall_tau(family, theta);
    let z = fit.packed[0];
    let se = fit.packed_se[0];
    let zq = normal_quantile(0.5 + fit.level / 2.0);
    let (lo_b, hi_b) = family.theta_bounds();
    let mut clipped = false;
    let mut image = |zz: f64| {
        let mut t = link.inverse(zz);
        if t < lo_b || t > hi_b || !family.contains(t) {
            clipped = true;
            warn!("θ interval endpoint {t} clipped to the {family} parameter space");
            t = t.clamp(lo_b, hi_b);
            if family == CopulaFamily::Clayton && t <= 0.0 {
                t = f64::MIN_POSITIVE;
            }
        }
        kendall_tau(family, t)
    };
    if !se.is_finite() {
        return TauEstimate { tau, lower: f64::NAN, upper: f64::NAN, clipped: false };
    }
    let a = image(z - zq * se);
    let b = image(z + zq * se);
    TauEstimate { tau, lower: a.min(b), upper: a.max(b), clipped }
}
