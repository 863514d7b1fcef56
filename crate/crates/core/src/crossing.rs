//! Crossing times of two covariate-specific survival curves, with a cluster
//! bootstrap for interval estimation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::BivariateData;
use crate::error::{Error, Result};
use crate::estimation::{refit, FitOptions, FitResult};
use crate::model::{MarginStructure, Model};
use crate::par::map_indexed;
use crate::regression::MarginModel;
use crate::roots::brent;
use crate::special::quantile_sorted;

/// Residual and relative bracket width required of every reported root.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRoot {
    pub time: f64,
    /// `S(t | x_control) - S(t | x_treat)` at the root.
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// `S(t | x_control) - S(t | x_treat)`.
pub fn survival_difference(m: &MarginModel, x_control: &[f64], x_treat: &[f64], t: f64) -> Result<f64> {
    Ok(m.survival(x_control, t)? - m.survival(x_treat, t)?)
}

/// Root of the survival difference on `bracket`.
pub fn crossing_time(m: &MarginModel, x_control: &[f64], x_treat: &[f64], bracket: (f64, f64)) -> Result<CrossingRoot> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("bracket ({lo}, {hi}) must be positive and ordered")));
    }
    if x_control == x_treat {
        return Err(Error::InvalidInput("control and treatment rows are identical; no isolated crossing".into()));
    }
    let g = |t: f64| survival_difference(m, x_control, x_treat, t).unwrap_or(f64::NAN);
    let r = brent(g, lo, hi, 0.0, 0.5 * ROOT_TOL, ROOT_TOL, 500)?;
    Ok(CrossingRoot { time: r.x, residual: r.fx, bracket, iterations: r.iterations })
}

/// Largest time the fitted baseline of margin `j` can be evaluated at.
fn horizon(model: &Model, j: usize) -> f64 {
    match &model.structure[j] {
        MarginStructure::Bernstein { upsilon, .. } => *upsilon,
        _ => f64::INFINITY,
    }
}

/// `(1e-6, 1.5 × largest observed time)`, cut at the Bernstein horizon.
pub fn default_bracket(data: &BivariateData, model: &Model, j: usize) -> (f64, f64) {
    (1e-6, (1.5 * data.margin(j).max_time()).min(horizon(model, j)))
}

/// Crossing time of margin `j` (0 or 1) under a fitted model. On a missing
/// sign change the upper end is doubled once before giving up.
pub fn crossing_point(
    fit: &FitResult,
    j: usize,
    x_control: &[f64],
    x_treat: &[f64],
    bracket: (f64, f64),
) -> Result<CrossingRoot> {
    if j > 1 {
        return Err(Error::InvalidInput(format!("margin index {j} out of range")));
    }
    let m = fit.model.margin_model(&fit.params, j)?;
    match crossing_time(&m, x_control, x_treat, bracket) {
        Err(Error::NoSignChange { .. }) => {
            let wider = (bracket.1 * 2.0).min(horizon(&fit.model, j));
            if wider > bracket.1 {
                crossing_time(&m, x_control, x_treat, (bracket.0, wider))
            } else {
                Err(Error::NoSignChange { lo: bracket.0, hi: bracket.1 })
            }
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingRequest {
    /// Margin index, 0 or 1.
    pub margin: usize,
    pub x_control: Vec<f64>,
    pub x_treat: Vec<f64>,
    #[serde(default)]
    pub bracket: Option<(f64, f64)>,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCrossing {
    pub point: CrossingRoot,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub successes: usize,
    pub failures: usize,
    /// More than 20% of the replicates failed.
    pub unreliable: bool,
    /// Root of each replicate, `None` where the refit or the root search failed.
    pub replicates: Vec<Option<f64>>,
}

/// Percentile bootstrap over clusters: each replicate resamples `n` clusters
/// with replacement, refits from the original estimates, and recomputes the
/// crossing time on the original bracket.
pub fn bootstrap_crossing(
    data: &BivariateData,
    fit: &FitResult,
    req: &CrossingRequest,
    opts: &FitOptions,
) -> Result<BootstrapCrossing> {
    if req.replicates == 0 {
        return Err(Error::InvalidInput("bootstrap needs at least one replicate".into()));
    }
    if !(req.level > 0.0 && req.level < 1.0) {
        return Err(Error::InvalidInput(format!("confidence level {} must lie in (0, 1)", req.level)));
    }
    let bracket = req.bracket.unwrap_or_else(|| default_bracket(data, &fit.model, req.margin));
    let point = crossing_point(fit, req.margin, &req.x_control, &req.x_treat, bracket)?;
    let refit_opts = FitOptions { standard_errors: false, ..*opts };
    let n = data.n();
    let replicates = map_indexed(req.replicates, req.workers, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        rng.set_stream(b as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let boot = data.resample(&idx);
        let refit = refit(&boot, fit, &refit_opts).ok()?;
        if !refit.converged {
            return None;
        }
        crossing_point(&refit, req.margin, &req.x_control, &req.x_treat, bracket).ok().map(|r| r.time)
    });
    let mut ok: Vec<f64> = replicates.iter().flatten().copied().collect();
    ok.sort_by(f64::total_cmp);
    let failures = req.replicates - ok.len();
    let alpha = 1.0 - req.level;
    let (lower, upper) = if ok.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (quantile_sorted(&ok, alpha / 2.0), quantile_sorted(&ok, 1.0 - alpha / 2.0))
    };
    Ok(BootstrapCrossing {
        point,
        lower,
        upper,
        level: req.level,
        successes: ok.len(),
        failures,
        unreliable: failures as f64 > 0.2 * req.replicates as f64,
        replicates,
    })
}
