//! Model specifications, parameter sets and the unconstrained packing used
//! by the optimizer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::{quantile_grid, structural_size, Baseline};
use crate::copula::{Copula, CopulaFamily};
use crate::data::BivariateData;
use crate::error::{Error, Result};
use crate::regression::{MarginModel, Regression, RegressionClass};

/// Baseline families available for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Weibull,
    #[serde(rename = "BP")]
    Bernstein,
    #[serde(rename = "PE")]
    Piecewise,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Weibull, BaselineKind::Bernstein, BaselineKind::Piecewise];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Weibull => "Weibull",
            BaselineKind::Bernstein => "BP",
            BaselineKind::Piecewise => "PE",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weibull" => Ok(BaselineKind::Weibull),
            "bp" | "bernstein" => Ok(BaselineKind::Bernstein),
            "pe" | "piecewise" => Ok(BaselineKind::Piecewise),
            other => Err(Error::InvalidInput(format!("unknown baseline '{other}'"))),
        }
    }
}

/// What to fit: copula family, baseline family and regression class shared by
/// both margins. `size` overrides the Bernstein degree or the number of
/// piecewise intervals, which otherwise default to `⌈n^{2/5}⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub copula: CopulaFamily,
    pub baseline: BaselineKind,
    pub class: RegressionClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
}

impl ModelSpec {
    pub fn new(copula: CopulaFamily, baseline: BaselineKind, class: RegressionClass) -> Self {
        ModelSpec { copula, baseline, class, size: None }
    }

    pub fn label(&self) -> String {
        format!("{}-{}-{}", self.copula, self.baseline, self.class)
    }
}

/// Data-dependent structure of one margin's baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum MarginStructure {
    Weibull,
    #[serde(rename = "BP")]
    Bernstein { degree: usize, upsilon: f64 },
    #[serde(rename = "PE")]
    Piecewise { grid: Vec<f64> },
}

impl MarginStructure {
    pub fn n_kappa(&self) -> usize {
        match self {
            MarginStructure::Weibull => 2,
            MarginStructure::Bernstein { degree, .. } => *degree,
            MarginStructure::Piecewise { grid } => grid.len(),
        }
    }

    fn kappa_names(&self, j: usize) -> Vec<String> {
        match self {
            MarginStructure::Weibull => vec![format!("alpha{j}"), format!("lambda{j}")],
            MarginStructure::Bernstein { degree, .. } => (1..=*degree).map(|k| format!("gamma{j}[{k}]")).collect(),
            MarginStructure::Piecewise { grid } => (1..=grid.len()).map(|k| format!("rate{j}[{k}]")).collect(),
        }
    }

    pub fn baseline(&self, kappa: &[f64]) -> Result<Baseline> {
        if kappa.len() != self.n_kappa() {
            return Err(Error::Dimension { expected: self.n_kappa(), got: kappa.len() });
        }
        match self {
            MarginStructure::Weibull => Baseline::weibull(kappa[0], kappa[1]),
            MarginStructure::Bernstein { upsilon, .. } => Baseline::bernstein(kappa.to_vec(), *upsilon),
            MarginStructure::Piecewise { grid } => Baseline::piecewise(kappa.to_vec(), grid.clone()),
        }
    }
}

/// Parameters of one margin. Under PH `beta_long` equals `beta_short`; under
/// PO it is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginParams {
    pub kappa: Vec<f64>,
    pub beta_short: Vec<f64>,
    pub beta_long: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub theta: f64,
    pub margins: [MarginParams; 2],
}

/// Transform between a natural-scale parameter and its unconstrained
/// coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Log,
    /// `log(θ - 1)`.
    LogShifted,
    Atanh,
}

/// Largest |θ| fed to `atanh` so that the AMH boundary θ = ±1 stays finite.
const AMH_EDGE: f64 = 1.0 - 1e-12;

impl Link {
    pub fn forward(self, v: f64) -> f64 {
        match self {
            Link::Identity => v,
            Link::Log => v.ln(),
            Link::LogShifted => (v - 1.0).ln(),
            Link::Atanh => v.clamp(-AMH_EDGE, AMH_EDGE).atanh(),
        }
    }

    pub fn inverse(self, z: f64) -> f64 {
        match self {
            Link::Identity => z,
            Link::Log => z.exp(),
            Link::LogShifted => 1.0 + z.exp(),
            Link::Atanh => z.tanh(),
        }
    }

    /// `d inverse(z) / dz`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Log | Link::LogShifted => z.exp(),
            Link::Atanh => 1.0 - z.tanh().powi(2),
        }
    }

    pub fn for_copula(family: CopulaFamily) -> Link {
        match family {
            CopulaFamily::Amh => Link::Atanh,
            CopulaFamily::Clayton => Link::Log,
            CopulaFamily::Frank => Link::Identity,
            CopulaFamily::Gumbel | CopulaFamily::Joe => Link::LogShifted,
        }
    }
}

/// A [`ModelSpec`] bound to the structure of a particular dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub structure: [MarginStructure; 2],
    pub n_covariates: [usize; 2],
}

impl Model {
    /// Fixes the Bernstein horizon (1.01 times the largest time) or the
    /// piecewise grid (quantiles of the event times) from `data`.
    pub fn resolve(spec: ModelSpec, data: &BivariateData) -> Result<Model> {
        if data.n() == 0 {
            return Err(Error::InvalidData("dataset is empty".into()));
        }
        let size = spec.size.unwrap_or_else(|| structural_size(data.n()));
        if size == 0 {
            return Err(Error::InvalidInput("baseline size must be at least 1".into()));
        }
        let mut structure = [MarginStructure::Weibull, MarginStructure::Weibull];
        for (j, s) in structure.iter_mut().enumerate() {
            let m = data.margin(j);
            *s = match spec.baseline {
                BaselineKind::Weibull => MarginStructure::Weibull,
                BaselineKind::Bernstein => MarginStructure::Bernstein { degree: size, upsilon: 1.01 * m.max_time() },
                BaselineKind::Piecewise => MarginStructure::Piecewise { grid: quantile_grid(&m.event_times(), size)? },
            };
        }
        Ok(Model { spec, structure, n_covariates: [data.margins[0].q, data.margins[1].q] })
    }

    /// Same structure with a different copula or regression class.
    pub fn with_spec(&self, copula: CopulaFamily, class: RegressionClass) -> Model {
        let mut m = self.clone();
        m.spec.copula = copula;
        m.spec.class = class;
        m
    }

    pub fn theta_link(&self) -> Link {
        Link::for_copula(self.spec.copula)
    }

    fn n_margin(&self, j: usize) -> usize {
        self.structure[j].n_kappa() + self.spec.class.n_coefficients(self.n_covariates[j])
    }

    /// Number of free parameters.
    pub fn n_params(&self) -> usize {
        1 + self.n_margin(0) + self.n_margin(1)
    }

    /// Links of the packed coordinates, in packing order: θ, then for each
    /// margin κ, β^(S) and (YP only) β^(L).
    pub fn links(&self) -> Vec<Link> {
        let mut out = vec![self.theta_link()];
        for j in 0..2 {
            out.extend(std::iter::repeat(Link::Log).take(self.structure[j].n_kappa()));
            out.extend(std::iter::repeat(Link::Identity).take(self.spec.class.n_coefficients(self.n_covariates[j])));
        }
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut out = vec!["theta".to_string()];
        for j in 0..2 {
            let m = j + 1;
            out.extend(self.structure[j].kappa_names(m));
            let q = self.n_covariates[j];
            out.extend((1..=q).map(|l| format!("beta{m}S[{l}]")));
            if self.spec.class == RegressionClass::Yp {
                out.extend((1..=q).map(|l| format!("beta{m}L[{l}]")));
            }
        }
        out
    }

    /// Checks dimensions, domains and class constraints.
    pub fn validate(&self, p: &ParamSet) -> Result<()> {
        Copula::new(self.spec.copula, p.theta)?;
        for j in 0..2 {
            let mp = &p.margins[j];
            self.structure[j].baseline(&mp.kappa)?;
            let q = self.n_covariates[j];
            if mp.beta_short.len() != q || mp.beta_long.len() != q {
                return Err(Error::Dimension { expected: q, got: mp.beta_short.len().min(mp.beta_long.len()) });
            }
            Regression::new(self.spec.class, mp.beta_short.clone(), mp.beta_long.clone())?;
        }
        Ok(())
    }

    /// Free parameters on the natural scale, in packing order.
    pub fn flatten(&self, p: &ParamSet) -> Result<Vec<f64>> {
        self.validate(p)?;
        let mut out = Vec::with_capacity(self.n_params());
        out.push(p.theta);
        for mp in &p.margins {
            out.extend_from_slice(&mp.kappa);
            out.extend_from_slice(&mp.beta_short);
            if self.spec.class == RegressionClass::Yp {
                out.extend_from_slice(&mp.beta_long);
            }
        }
        Ok(out)
    }

    /// Inverse of [`Model::flatten`]; applies the class ties.
    pub fn assemble(&self, v: &[f64]) -> Result<ParamSet> {
        if v.len() != self.n_params() {
            return Err(Error::Dimension { expected: self.n_params(), got: v.len() });
        }
        let mut pos = 1;
        let mut take = |k: usize| {
            let s = v[pos..pos + k].to_vec();
            pos += k;
            s
        };
        let mut margins = Vec::with_capacity(2);
        for j in 0..2 {
            let q = self.n_covariates[j];
            let kappa = take(self.structure[j].n_kappa());
            let beta_short = take(q);
            let beta_long = match self.spec.class {
                RegressionClass::Ph => beta_short.clone(),
                RegressionClass::Po => vec![0.0; q],
                RegressionClass::Yp => take(q),
            };
            margins.push(MarginParams { kappa, beta_short, beta_long });
        }
        let second = margins.pop().unwrap();
        let first = margins.pop().unwrap();
        Ok(ParamSet { theta: v[0], margins: [first, second] })
    }

    pub fn pack(&self, p: &ParamSet) -> Result<Vec<f64>> {
        let natural = self.flatten(p)?;
        Ok(natural.iter().zip(self.links()).map(|(&v, l)| l.forward(v)).collect())
    }

    pub fn unpack(&self, z: &[f64]) -> Result<ParamSet> {
        if z.len() != self.n_params() {
            return Err(Error::Dimension { expected: self.n_params(), got: z.len() });
        }
        let natural: Vec<f64> = z.iter().zip(self.links()).map(|(&v, l)| l.inverse(v)).collect();
        if natural.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("packed vector maps outside the parameter space"));
        }
        self.assemble(&natural)
    }

    pub fn copula(&self, p: &ParamSet) -> Result<Copula> {
        Copula::new(self.spec.copula, p.theta)
    }

    pub fn margin_model(&self, p: &ParamSet, j: usize) -> Result<MarginModel> {
        let mp = &p.margins[j];
        let baseline = self.structure[j].baseline(&mp.kappa)?;
        let regression = Regression::new(self.spec.class, mp.beta_short.clone(), mp.beta_long.clone())?;
        Ok(MarginModel::new(baseline, regression))
    }
}
