//! JSON reports and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use survcop::crossing::BootstrapCrossing;
use survcop::estimation::{tau_with_interval, Diagnostics, Estimate, FitResult, LrTest, TauEstimate};
use survcop::model::{MarginStructure, ModelSpec};
use survcop::regression::RegressionClass;

use crate::error::{CliError, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub model: String,
    pub spec: ModelSpec,
    pub n: usize,
    pub n_params: usize,
    pub loglik: f64,
    pub aic: f64,
    pub converged: bool,
    pub estimates: Vec<Estimate>,
    pub tau: TauEstimate,
    pub level: f64,
    pub covariates: [Vec<String>; 2],
    pub structure: [MarginStructure; 2],
    pub diagnostics: Diagnostics,
}

impl FitReport {
    pub fn new(fit: &FitResult, covariates: [Vec<String>; 2]) -> Self {
        FitReport {
            model: fit.model.spec.label(),
            spec: fit.model.spec,
            n: fit.n,
            n_params: fit.n_params,
            loglik: fit.loglik,
            aic: fit.aic(),
            converged: fit.converged,
            estimates: fit.estimates.clone(),
            tau: tau_with_interval(fit),
            level: fit.level,
            covariates,
            structure: fit.model.structure.clone(),
            diagnostics: fit.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub spec: ModelSpec,
    pub n_params: Option<usize>,
    pub loglik: Option<f64>,
    pub aic: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub n: usize,
    /// Converged model with the smallest AIC.
    pub best: Option<String>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CrossingReport {
    Crossing {
        model: String,
        /// 1 or 2.
        margin: usize,
        x_control: Vec<f64>,
        x_treat: Vec<f64>,
        #[serde(flatten)]
        result: BootstrapCrossing,
    },
    NoCrossing {
        model: String,
        margin: usize,
        x_control: Vec<f64>,
        x_treat: Vec<f64>,
        bracket: (f64, f64),
        message: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct LrReport {
    pub reduced: String,
    pub full: String,
    pub reduced_loglik: f64,
    pub full_loglik: f64,
    #[serde(flatten)]
    pub test: LrTest,
    pub level: f64,
    /// Class preferred at `level`: the full model when the reduced one is
    /// rejected, otherwise the more parsimonious reduced model.
    pub decision: RegressionClass,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub clusters: usize,
    pub replica: u64,
    pub event_rate: [f64; 2],
    pub theta: f64,
    pub tau: f64,
    pub dataset: String,
}
