//! The run configuration, a TOML document. Unknown keys are rejected at
//! every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use survcop::copula::CopulaFamily;
use survcop::estimation::FitOptions;
use survcop::model::{BaselineKind, ModelSpec};
use survcop::regression::RegressionClass;
use survcop::simulation::{GenBaseline, Scenario};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the scenario, the multistart jitter and the bootstrap unless
    /// `--seed` is given.
    pub seed: Option<u64>,
    /// Output directory, relative to the working directory.
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub fit: FitOptions,
    pub scenario: Option<ScenarioConfig>,
    pub mc: Option<McConfig>,
    pub crossing: Option<CrossingConfig>,
    pub sweep: Option<SweepConfig>,
    pub lrtest: Option<LrConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub copula: CopulaFamily,
    #[serde(default = "weibull")]
    pub baseline: BaselineKind,
    #[serde(default = "yp")]
    pub class: RegressionClass,
    /// Bernstein degree or number of piecewise intervals.
    pub size: Option<usize>,
}

impl From<ModelConfig> for ModelSpec {
    fn from(m: ModelConfig) -> ModelSpec {
        ModelSpec { copula: m.copula, baseline: m.baseline, class: m.class, size: m.size }
    }
}

fn weibull() -> BaselineKind {
    BaselineKind::Weibull
}

fn yp() -> RegressionClass {
    RegressionClass::Yp
}

/// A generating design. Omitted vectors take the reference values for the
/// chosen baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub copula: CopulaFamily,
    pub tau: f64,
    #[serde(default = "gen_weibull")]
    pub baseline: GenBaseline,
    #[serde(default = "yp")]
    pub class: RegressionClass,
    pub n: Option<usize>,
    pub kappa: Option<[Vec<f64>; 2]>,
    pub beta_short: Option<[Vec<f64>; 2]>,
    pub beta_long: Option<[Vec<f64>; 2]>,
    pub censor_caps: Option<[f64; 2]>,
}

fn gen_weibull() -> GenBaseline {
    GenBaseline::Weibull
}

impl ScenarioConfig {
    pub fn build(&self, seed: Option<u64>) -> Result<Scenario> {
        let mut s = Scenario::reference(self.copula, self.tau, self.baseline, self.class);
        if let Some(n) = self.n {
            s.n = n;
        }
        if let Some(k) = &self.kappa {
            s.kappa = k.clone();
        }
        if let Some(b) = &self.beta_short {
            s.beta_short = b.clone();
        }
        if let Some(b) = &self.beta_long {
            s.beta_long = b.clone();
        }
        if let Some(c) = self.censor_caps {
            s.censor_caps = c;
        }
        if let Some(seed) = seed {
            s.seed = seed;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "hundred")]
    pub replicas: usize,
    /// Models fitted to every replica; defaults to the `[model]` block.
    #[serde(default)]
    pub specs: Vec<ModelConfig>,
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingConfig {
    /// 1 or 2.
    #[serde(default = "first")]
    pub margin: usize,
    pub x_control: Vec<f64>,
    pub x_treat: Vec<f64>,
    pub bracket: Option<[f64; 2]>,
    #[serde(default = "two_hundred")]
    pub replicates: usize,
    #[serde(default = "ninety_five")]
    pub level: f64,
}

fn first() -> usize {
    1
}

fn two_hundred() -> usize {
    200
}

fn ninety_five() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "all_copulas")]
    pub copulas: Vec<CopulaFamily>,
    #[serde(default = "all_baselines")]
    pub baselines: Vec<BaselineKind>,
    #[serde(default = "all_classes")]
    pub classes: Vec<RegressionClass>,
    pub size: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { copulas: all_copulas(), baselines: all_baselines(), classes: all_classes(), size: None }
    }
}

fn all_copulas() -> Vec<CopulaFamily> {
    CopulaFamily::ALL.to_vec()
}

fn all_baselines() -> Vec<BaselineKind> {
    BaselineKind::ALL.to_vec()
}

fn all_classes() -> Vec<RegressionClass> {
    RegressionClass::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrConfig {
    /// Significance level of the decision.
    #[serde(default = "five_percent")]
    pub level: f64,
}

fn five_percent() -> f64 {
    0.05
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn model_spec(&self, path: &Path) -> Result<ModelSpec> {
        self.model.map(ModelSpec::from).ok_or_else(|| missing(path, "model"))
    }
}

pub(crate) fn missing(path: &Path, block: &str) -> CliError {
    CliError::Config { path: path.to_path_buf(), message: format!("missing [{block}] block") }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_document_parses() {
        let text = r#"
            seed = 7
            output = "out"
            [model]
            copula = "Clayton"
            baseline = "PE"
            size = 8
            [fit]
            grad_tol = 1e-6
            restarts = 1
            [scenario]
            copula = "GH"
            tau = 0.5
            baseline = "EW"
            class = "PH"
            n = 200
            [mc]
            replicas = 10
            specs = [{ copula = "Frank", class = "PO" }]
            [crossing]
            x_control = [0, 0]
            x_treat = [1, 0]
            [sweep]
            copulas = ["AMH"]
            [lrtest]
            level = 0.01
        "#;
        let c = RunConfig::parse(text, Path::new("c.toml")).unwrap();
        let spec = c.model_spec(Path::new("c.toml")).unwrap();
        assert_eq!(spec.label(), "Clayton-PE-YP");
        assert_eq!(spec.size, Some(8));
        assert_eq!(c.fit.restarts, 1);
        assert_eq!(c.fit.level, 0.95);
        let s = c.scenario.unwrap().build(c.seed).unwrap();
        assert_eq!((s.n, s.seed, s.kappa[0].len()), (200, 7, 3));
        assert_eq!(c.mc.unwrap().specs[0].baseline, BaselineKind::Weibull);
        assert_eq!(c.crossing.unwrap().replicates, 200);
        assert_eq!(c.sweep.unwrap().classes.len(), 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["colour = 1", "[model]\ncopula = \"Joe\"\nfamily = 2", "[fit]\ntolerance = 1"] {
            let e = RunConfig::parse(text, Path::new("bad.toml")).unwrap_err();
            assert!(e.to_string().contains("unknown field"), "{e}");
        }
    }
}
