//! Scenario-driven data generation and the Monte Carlo harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baseline::Baseline;
use crate::copula::{tau_inverse, Copula, CopulaFamily};
use crate::data::{BivariateData, MarginData};
use crate::error::{Error, Result};
use crate::estimation::{fit, tau_with_interval, Estimate, FitOptions, FitResult};
use crate::model::{BaselineKind, Model, ModelSpec};
use crate::par::map_indexed;
use crate::regression::{MarginModel, Regression, RegressionClass};
use crate::special::normal_quantile;

/// Baseline family used to generate marginal times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenBaseline {
    Weibull,
    #[serde(rename = "EW")]
    ExpWeibull,
}

/// A data-generating design. Both margins share the covariates
/// `z1 ~ Bern(0.5)` and `z2 ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub copula: CopulaFamily,
    pub tau: f64,
    pub baseline: GenBaseline,
    pub class: RegressionClass,
    /// `(alpha, lambda)` or `(alpha, lambda, xi)` per margin.
    pub kappa: [Vec<f64>; 2],
    pub beta_short: [Vec<f64>; 2],
    /// Used only by the YP class; PH ties it to `beta_short`, PO zeroes it.
    pub beta_long: [Vec<f64>; 2],
    /// Censoring times are drawn from `U(0, a_j)`; infinite caps disable censoring.
    pub censor_caps: [f64; 2],
    pub seed: u64,
}

pub const COVARIATE_NAMES: [&str; 2] = ["z1", "z2"];

impl Scenario {
    /// The reference design with n = 500: Weibull margins (1.2, 0.8) and
    /// (1.6, 1.2) with caps (6, 4), or exponentiated-Weibull margins
    /// (2.1, 0.5, 0.3) and (2.5, 0.6, 0.2) with caps (4, 3).
    pub fn reference(copula: CopulaFamily, tau: f64, baseline: GenBaseline, class: RegressionClass) -> Scenario {
        let (kappa, censor_caps) = match baseline {
            GenBaseline::Weibull => ([vec![1.2, 0.8], vec![1.6, 1.2]], [6.0, 4.0]),
            GenBaseline::ExpWeibull => ([vec![2.1, 0.5, 0.3], vec![2.5, 0.6, 0.2]], [4.0, 3.0]),
        };
        Scenario {
            n: 500,
            copula,
            tau,
            baseline,
            class,
            kappa,
            beta_short: [vec![-0.7, 0.4], vec![-0.9, 0.6]],
            beta_long: [vec![0.8, -0.6], vec![1.0, -0.8]],
            censor_caps,
            seed: 2024,
        }
    }

    /// Generating copula; τ beyond the AMH range is truncated to its limit.
    pub fn copula_param(&self) -> Result<Copula> {
        let inv = tau_inverse(self.copula, self.tau)?;
        Ok(inv.copula)
    }

    pub fn margin_model(&self, j: usize) -> Result<MarginModel> {
        let k = &self.kappa[j];
        let baseline = match (self.baseline, k.len()) {
            (GenBaseline::Weibull, 2) => Baseline::weibull(k[0], k[1])?,
            (GenBaseline::ExpWeibull, 3) => Baseline::exp_weibull(k[0], k[1], k[2])?,
            (_, got) => {
                return Err(Error::Dimension { expected: if self.baseline == GenBaseline::Weibull { 2 } else { 3 }, got })
            }
        };
        let bs = self.beta_short[j].clone();
        let regression = match self.class {
            RegressionClass::Ph => Regression::ph(bs),
            RegressionClass::Po => Regression::po(bs),
            RegressionClass::Yp => Regression::yp(bs, self.beta_long[j].clone())?,
        };
        Ok(MarginModel::new(baseline, regression))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("scenario needs at least one cluster".into()));
        }
        if self.censor_caps.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidInput("censoring caps must be positive".into()));
        }
        for j in 0..2 {
            if self.beta_short[j].len() != 2 {
                return Err(Error::Dimension { expected: 2, got: self.beta_short[j].len() });
            }
            self.margin_model(j)?;
        }
        self.copula_param()?;
        Ok(())
    }

    /// True values of the parameters of `model` that this scenario pins down.
    pub fn truths(&self, model: &Model) -> Result<Vec<(String, f64)>> {
        let cop = self.copula_param()?;
        let mut out = vec![("tau".to_string(), cop.kendall_tau())];
        if model.spec.copula == self.copula {
            out.push(("theta".to_string(), cop.theta()));
        }
        for j in 0..2 {
            let m = j + 1;
            if model.spec.baseline == BaselineKind::Weibull && self.baseline == GenBaseline::Weibull {
                out.push((format!("alpha{m}"), self.kappa[j][0]));
                out.push((format!("lambda{m}"), self.kappa[j][1]));
            }
            let nested = model.spec.class == self.class || model.spec.class == RegressionClass::Yp;
            if nested && model.n_covariates[j] == self.beta_short[j].len() {
                let reg = self.margin_model(j)?.regression;
                for (l, b) in reg.beta_short.iter().enumerate() {
                    out.push((format!("beta{m}S[{}]", l + 1), *b));
                }
                if model.spec.class == RegressionClass::Yp {
                    for (l, b) in reg.beta_long.iter().enumerate() {
                        out.push((format!("beta{m}L[{}]", l + 1), *b));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Random stream of replica `r`.
    pub fn replica_rng(&self, r: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r);
        rng
    }
}

/// Draws one dataset: covariates, a copula pair per cluster mapped through
/// the inverse marginal survivals, and uniform censoring.
pub fn generate_dataset<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<BivariateData> {
    s.validate()?;
    let cop = s.copula_param()?;
    let margins = [s.margin_model(0)?, s.margin_model(1)?];
    let mut rows = Vec::with_capacity(s.n);
    let mut y = [Vec::with_capacity(s.n), Vec::with_capacity(s.n)];
    let mut d = [Vec::with_capacity(s.n), Vec::with_capacity(s.n)];
    for _ in 0..s.n {
        let z1 = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        let z2: f64 = rng.sample(StandardNormal);
        let x = vec![z1, z2];
        let (u1, u2) = cop.sample_pair(rng);
        for (j, u) in [u1, u2].into_iter().enumerate() {
            let t = margins[j].inverse_survival(&x, u)?.max(f64::MIN_POSITIVE);
            let a = s.censor_caps[j];
            let c = if a.is_finite() { rng.gen::<f64>() * a } else { f64::INFINITY };
            if t <= c {
                y[j].push(t);
                d[j].push(true);
            } else {
                y[j].push(c.max(f64::MIN_POSITIVE));
                d[j].push(false);
            }
        }
        rows.push(x);
    }
    let names: Vec<String> = COVARIATE_NAMES.iter().map(|s| s.to_string()).collect();
    let [y1, y2] = y;
    let [d1, d2] = d;
    BivariateData::new(
        (1..=s.n).map(|i| i.to_string()).collect(),
        MarginData::new(y1, d1, &rows, names.clone())?,
        MarginData::new(y2, d2, &rows, names)?,
    )
}

/// Monte Carlo summary of one quantity. ARB is in percent and CR is the
/// percentage of intervals that cover the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub truth: f64,
    pub count: usize,
    pub ae: f64,
    pub sde: f64,
    pub ase: f64,
    pub arb: f64,
    pub alb: f64,
    pub aub: f64,
    pub cr: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn mc_statistics(estimates: &[f64], ses: &[f64], lowers: &[f64], uppers: &[f64], truth: f64) -> Result<McStats> {
    let m = estimates.len();
    if ses.len() != m || lowers.len() != m || uppers.len() != m {
        return Err(Error::Dimension { expected: m, got: ses.len().min(lowers.len()).min(uppers.len()) });
    }
    if truth == 0.0 {
        return Err(Error::InvalidInput("relative bias is undefined for a zero true value".into()));
    }
    let ae = mean(estimates);
    let sde = if m > 1 {
        (estimates.iter().map(|e| (e - ae).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt()
    } else {
        0.0
    };
    let finite = |v: &[f64]| v.iter().copied().filter(|x| x.is_finite()).collect::<Vec<_>>();
    let arb = 100.0 * mean(&estimates.iter().map(|e| (e - truth) / truth.abs()).collect::<Vec<_>>());
    let covered = lowers.iter().zip(uppers).filter(|(l, u)| **l <= truth && truth <= **u).count();
    Ok(McStats {
        truth,
        count: m,
        ae,
        sde,
        ase: mean(&finite(ses)),
        arb,
        alb: mean(&finite(lowers)),
        aub: mean(&finite(uppers)),
        cr: if m == 0 { f64::NAN } else { 100.0 * covered as f64 / m as f64 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McOptions {
    pub workers: usize,
    pub fit: FitOptions,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { workers: 1, fit: FitOptions::default() }
    }
}

/// One fitted model on one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub replica: usize,
    pub spec: String,
    pub converged: bool,
    pub loglik: f64,
    pub aic: f64,
    /// Model parameters followed by `tau`.
    pub estimates: Vec<Estimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitySummary {
    pub name: String,
    #[serde(flatten)]
    pub stats: McStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSummary {
    pub spec: ModelSpec,
    pub label: String,
    pub converged: usize,
    pub failed: usize,
    pub mean_aic: f64,
    pub choice_proportion: f64,
    pub quantities: Vec<QuantitySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub scenario: Scenario,
    pub replicas: usize,
    pub theta: f64,
    pub tau: f64,
    /// Average proportion of observed events per margin.
    pub event_rate: [f64; 2],
    pub specs: Vec<SpecSummary>,
    #[serde(skip)]
    pub records: Vec<ReplicaRecord>,
}

impl McReport {
    pub fn spec(&self, label: &str) -> Option<&SpecSummary> {
        self.specs.iter().find(|s| s.label == label)
    }
}

impl SpecSummary {
    pub fn quantity(&self, name: &str) -> Option<&McStats> {
        self.quantities.iter().find(|q| q.name == name).map(|q| &q.stats)
    }
}

fn record(replica: usize, spec: &ModelSpec, fit: Result<FitResult>) -> (ReplicaRecord, Option<Model>) {
    match fit {
        Ok(f) => {
            let t = tau_with_interval(&f);
            let mut estimates = f.estimates.clone();
            // τ has no direct standard error; report the interval half-width in SE units
            let zq = normal_quantile(0.5 + f.level / 2.0);
            let se_tau = if t.lower.is_finite() { (t.upper - t.lower) / (2.0 * zq) } else { f64::NAN };
            estimates.push(Estimate { name: "tau".into(), value: t.tau, se: se_tau, lower: t.lower, upper: t.upper });
            (
                ReplicaRecord {
                    replica,
                    spec: spec.label(),
                    converged: f.converged,
                    loglik: f.loglik,
                    aic: f.aic(),
                    estimates,
                    error: None,
                },
                Some(f.model),
            )
        }
        Err(e) => (
            ReplicaRecord {
                replica,
                spec: spec.label(),
                converged: false,
                loglik: f64::NAN,
                aic: f64::NAN,
                estimates: Vec::new(),
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

/// Runs `m` replicas of `s`, fitting every spec on each, and aggregates.
/// Non-converged fits are excluded from a spec's statistics and counted.
pub fn run_mc(s: &Scenario, m: usize, specs: &[ModelSpec], opts: &McOptions) -> Result<McReport> {
    s.validate()?;
    if m == 0 || specs.is_empty() {
        return Err(Error::InvalidInput("need at least one replica and one model".into()));
    }
    let cop = s.copula_param()?;
    let per_replica = map_indexed(m, opts.workers, |r| -> Result<(Vec<(ReplicaRecord, Option<Model>)>, [f64; 2])> {
        let mut rng = s.replica_rng(r as u64);
        let data = generate_dataset(s, &mut rng)?;
        let rate = [0, 1].map(|j| data.margin(j).events() as f64 / data.n() as f64);
        let recs = specs.iter().map(|spec| record(r, spec, fit(&data, *spec, &opts.fit))).collect();
        Ok((recs, rate))
    });
    let mut rows: Vec<Vec<(ReplicaRecord, Option<Model>)>> = Vec::with_capacity(m);
    let mut rates = [0.0; 2];
    for item in per_replica {
        let (recs, rate) = item?;
        rates[0] += rate[0] / m as f64;
        rates[1] += rate[1] / m as f64;
        rows.push(recs);
    }
    // AIC choice per replica among converged fits; ties go to the earlier spec
    let mut chosen = vec![0usize; specs.len()];
    let mut decided = 0usize;
    for recs in &rows {
        let best = recs
            .iter()
            .enumerate()
            .filter(|(_, (r, _))| r.converged && r.aic.is_finite())
            .min_by(|a, b| a.1 .0.aic.total_cmp(&b.1 .0.aic).then(a.0.cmp(&b.0)));
        if let Some((k, _)) = best {
            chosen[k] += 1;
            decided += 1;
        }
    }
    let mut summaries = Vec::with_capacity(specs.len());
    for (k, spec) in specs.iter().enumerate() {
        let ok: Vec<&(ReplicaRecord, Option<Model>)> = rows.iter().map(|r| &r[k]).filter(|(r, _)| r.converged).collect();
        let model = ok.iter().find_map(|(_, m)| m.clone());
        let mut quantities = Vec::new();
        if let Some(model) = &model {
            for (name, truth) in s.truths(model)? {
                let mut cols: [Vec<f64>; 4] = Default::default();
                for (r, _) in &ok {
                    if let Some(e) = r.estimates.iter().find(|e| e.name == name) {
                        cols[0].push(e.value);
                        cols[1].push(e.se);
                        cols[2].push(e.lower);
                        cols[3].push(e.upper);
                    }
                }
                if truth != 0.0 && !cols[0].is_empty() {
                    let stats = mc_statistics(&cols[0], &cols[1], &cols[2], &cols[3], truth)?;
                    quantities.push(QuantitySummary { name, stats });
                }
            }
        }
        summaries.push(SpecSummary {
            spec: *spec,
            label: spec.label(),
            converged: ok.len(),
            failed: m - ok.len(),
            mean_aic: mean(&ok.iter().map(|(r, _)| r.aic).collect::<Vec<_>>()),
            choice_proportion: if decided == 0 { f64::NAN } else { chosen[k] as f64 / decided as f64 },
            quantities,
        });
    }
    Ok(McReport {
        scenario: s.clone(),
        replicas: m,
        theta: cop.theta(),
        tau: cop.kendall_tau(),
        event_rate: rates,
        specs: summaries,
        records: rows.into_iter().flatten().map(|(r, _)| r).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn statistics_by_hand() {
        let s = mc_statistics(&[1.0, 3.0], &[0.5, 0.7], &[0.0, 2.5], &[2.5, 4.0], 2.0).unwrap();
        assert_relative_eq!(s.ae, 2.0);
        assert_relative_eq!(s.arb, 0.0);
        assert_relative_eq!(s.sde, 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s.ase, 0.6, epsilon = 1e-15);
        assert_relative_eq!(s.cr, 50.0);
        assert_relative_eq!(s.alb, 1.25);
        let exact = mc_statistics(&[2.0; 3], &[0.0; 3], &[2.0; 3], &[2.0; 3], 2.0).unwrap();
        assert_eq!((exact.ae, exact.arb, exact.sde, exact.cr), (2.0, 0.0, 0.0, 100.0));
        assert!(mc_statistics(&[1.0], &[1.0], &[0.0], &[2.0], 0.0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let mut s = Scenario::reference(CopulaFamily::Clayton, 0.25, GenBaseline::Weibull, RegressionClass::Yp);
        s.n = 50;
        let a = generate_dataset(&s, &mut s.replica_rng(3)).unwrap();
        let b = generate_dataset(&s, &mut s.replica_rng(3)).unwrap();
        let c = generate_dataset(&s, &mut s.replica_rng(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn infinite_caps_mean_no_censoring() {
        let mut s = Scenario::reference(CopulaFamily::Frank, 0.5, GenBaseline::ExpWeibull, RegressionClass::Po);
        s.n = 200;
        s.censor_caps = [f64::INFINITY; 2];
        let d = generate_dataset(&s, &mut s.replica_rng(0)).unwrap();
        assert_eq!(d.margin(0).events(), 200);
        assert_eq!(d.margin(1).events(), 200);
    }

    #[test]
    fn amh_tau_is_truncated() {
        let s = Scenario::reference(CopulaFamily::Amh, 0.5, GenBaseline::Weibull, RegressionClass::Yp);
        assert_eq!(s.copula_param().unwrap().theta(), 1.0);
    }
}
