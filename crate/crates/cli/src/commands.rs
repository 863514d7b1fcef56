//! One function per subcommand. Each writes its files into the output
//! directory and returns whether every fit converged.

use std::path::{Path, PathBuf};

use survcop::crossing::{bootstrap_crossing, crossing_point, default_bracket, CrossingRequest};
use survcop::data::BivariateData;
use survcop::estimation::{fit, fit_full_from_reduced, lr_test, FitOptions, FitResult};
use survcop::model::ModelSpec;
use survcop::par::{available_workers, map_indexed};
use survcop::regression::RegressionClass;
use survcop::simulation::{generate_dataset, run_mc, McOptions};

use crate::config::{missing, RunConfig, SweepConfig};
use crate::dataset::{read_dataset, write_dataset};
use crate::error::{CliError, Result};
use crate::prepare::prepare_csv;
use crate::report::{
    write_atomic, write_json, CrossingReport, FitReport, LrReport, SimulateReport, SweepReport, SweepRow,
};

/// Settings from the command line, which take precedence over the config.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 2,
        }
    }

    fn from_converged(ok: bool) -> Status {
        if ok {
            Status::Ok
        } else {
            Status::NotConverged
        }
    }
}

impl Context {
    fn seed(&self, cfg: &RunConfig) -> Option<u64> {
        self.seed.or(cfg.seed)
    }

    fn workers(&self, cfg: &RunConfig) -> usize {
        self.workers.or(cfg.workers).unwrap_or_else(available_workers).max(1)
    }

    fn out_path(&self, cfg: &RunConfig, name: &str) -> PathBuf {
        let dir = self.out_dir.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
        dir.join(name)
    }

    fn fit_options(&self, cfg: &RunConfig) -> FitOptions {
        let mut opts = cfg.fit;
        if let Some(seed) = self.seed(cfg) {
            opts.seed = seed;
        }
        opts
    }
}

fn covariate_names(data: &BivariateData) -> [Vec<String>; 2] {
    [data.margin(0).names.clone(), data.margin(1).names.clone()]
}

fn describe(f: &FitResult) -> String {
    format!(
        "{}: loglik {:.4}, AIC {:.4}, {} parameters, {}",
        f.model.spec.label(),
        f.loglik,
        f.aic(),
        f.n_params,
        if f.converged { "converged" } else { "NOT converged" }
    )
}

pub fn cmd_fit(ctx: &Context, config: &Path, data_path: &Path) -> Result<Status> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.model_spec(config)?;
    let data = read_dataset(data_path)?;
    let f = fit(&data, spec, &ctx.fit_options(&cfg))?;
    let out = ctx.out_path(&cfg, "fit.json");
    write_json(&out, &FitReport::new(&f, covariate_names(&data)))?;
    println!("{}", describe(&f));
    println!("report written to {}", out.display());
    Ok(Status::from_converged(f.converged))
}

pub fn cmd_sweep(ctx: &Context, config: Option<&Path>, data_path: &Path) -> Result<Status> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let data = read_dataset(data_path)?;
    let opts = FitOptions { standard_errors: false, ..ctx.fit_options(&cfg) };
    let specs = sweep_specs(&sweep);
    let rows = map_indexed(specs.len(), ctx.workers(&cfg), |k| {
        let spec = specs[k];
        match fit(&data, spec, &opts) {
            Ok(f) => SweepRow {
                model: spec.label(),
                spec,
                n_params: Some(f.n_params),
                loglik: Some(f.loglik),
                aic: Some(f.aic()),
                converged: f.converged,
                error: None,
            },
            Err(e) => SweepRow {
                model: spec.label(),
                spec,
                n_params: None,
                loglik: None,
                aic: None,
                converged: false,
                error: Some(e.to_string()),
            },
        }
    });
    let best = rows
        .iter()
        .filter(|r| r.converged)
        .filter_map(|r| r.aic.map(|a| (a, &r.model)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, m)| m.clone());
    let mut csv = String::from("model,copula,baseline,class,n_params,loglik,aic,converged,error\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.model,
            r.spec.copula,
            r.spec.baseline,
            r.spec.class,
            r.n_params.map_or(String::new(), |k| k.to_string()),
            opt(r.loglik),
            opt(r.aic),
            r.converged,
            r.error.as_deref().unwrap_or("").replace([',', '\n'], " ")
        ));
    }
    for r in &rows {
        println!("{:<24} AIC {:>14}  {}", r.model, opt(r.aic), if r.converged { "" } else { "not converged" });
    }
    let any = best.is_some();
    if let Some(b) = &best {
        println!("smallest AIC: {b}");
    }
    write_json(&ctx.out_path(&cfg, "sweep.json"), &SweepReport { n: data.n(), best, rows })?;
    write_atomic(&ctx.out_path(&cfg, "sweep.csv"), csv.as_bytes())?;
    Ok(Status::from_converged(any))
}

fn sweep_specs(s: &SweepConfig) -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for &copula in &s.copulas {
        for &baseline in &s.baselines {
            for &class in &s.classes {
                out.push(ModelSpec { copula, baseline, class, size: s.size });
            }
        }
    }
    out
}

pub fn cmd_simulate(ctx: &Context, config: &Path, replica: u64) -> Result<Status> {
    let cfg = RunConfig::load(config)?;
    let scenario = cfg.scenario.as_ref().ok_or_else(|| missing(config, "scenario"))?.build(ctx.seed(&cfg))?;
    let data = generate_dataset(&scenario, &mut scenario.replica_rng(replica))?;
    let path = ctx.out_path(&cfg, "dataset.csv");
    write_dataset(&path, &data)?;
    let rate = [0, 1].map(|j| data.margin(j).events() as f64 / data.n() as f64);
    let cop = scenario.copula_param()?;
    let report = SimulateReport {
        clusters: data.n(),
        replica,
        event_rate: rate,
        theta: cop.theta(),
        tau: cop.kendall_tau(),
        dataset: path.display().to_string(),
    };
    write_json(&ctx.out_path(&cfg, "simulate.json"), &report)?;
    println!(
        "{} clusters written to {}; failure rates {:.3} (margin 1) and {:.3} (margin 2)",
        data.n(),
        path.display(),
        rate[0],
        rate[1]
    );
    Ok(Status::Ok)
}

pub fn cmd_mc(ctx: &Context, config: &Path) -> Result<Status> {
    let cfg = RunConfig::load(config)?;
    let scenario = cfg.scenario.as_ref().ok_or_else(|| missing(config, "scenario"))?.build(ctx.seed(&cfg))?;
    let mc = cfg.mc.clone().ok_or_else(|| missing(config, "mc"))?;
    let specs: Vec<ModelSpec> = if mc.specs.is_empty() {
        vec![cfg.model_spec(config)?]
    } else {
        mc.specs.iter().map(|&m| m.into()).collect()
    };
    let opts = McOptions { workers: ctx.workers(&cfg), fit: ctx.fit_options(&cfg) };
    let report = run_mc(&scenario, mc.replicas, &specs, &opts)?;
    write_json(&ctx.out_path(&cfg, "mc.json"), &report)?;
    let mut csv = String::from("replica,model,converged,loglik,aic,parameter,value,se,lower,upper,error\n");
    for r in &report.records {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], " ");
        if r.estimates.is_empty() {
            csv.push_str(&format!("{},{},{},{},{},,,,,,{err}\n", r.replica, r.spec, r.converged, r.loglik, r.aic));
        }
        for e in &r.estimates {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{err}\n",
                r.replica, r.spec, r.converged, r.loglik, r.aic, e.name, e.value, e.se, e.lower, e.upper
            ));
        }
    }
    write_atomic(&ctx.out_path(&cfg, "mc_records.csv"), csv.as_bytes())?;
    for s in &report.specs {
        println!(
            "{}: {} converged, {} failed, mean AIC {:.3}, AIC choice {:.3}",
            s.label, s.converged, s.failed, s.mean_aic, s.choice_proportion
        );
        for q in &s.quantities {
            println!("  {:<12} truth {:>9.4}  AE {:>9.4}  ARB {:>7.2}%  CR {:>5.1}%", q.name, q.stats.truth, q.stats.ae, q.stats.arb, q.stats.cr);
        }
    }
    Ok(Status::from_converged(report.specs.iter().all(|s| s.failed == 0)))
}

pub fn cmd_crossing(ctx: &Context, config: &Path, data_path: &Path) -> Result<Status> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.model_spec(config)?;
    let cc = cfg.crossing.clone().ok_or_else(|| missing(config, "crossing"))?;
    if !(1..=2).contains(&cc.margin) {
        return Err(CliError::Input(format!("crossing margin must be 1 or 2, got {}", cc.margin)));
    }
    let j = cc.margin - 1;
    let data = read_dataset(data_path)?;
    let opts = ctx.fit_options(&cfg);
    let f = fit(&data, spec, &opts)?;
    println!("{}", describe(&f));
    if !f.converged {
        eprintln!("the fit did not converge; no crossing analysis was run");
        return Ok(Status::NotConverged);
    }
    let bracket = cc.bracket.map(|[a, b]| (a, b)).unwrap_or_else(|| default_bracket(&data, &f.model, j));
    let out = ctx.out_path(&cfg, "crossing.json");
    let report = match crossing_point(&f, j, &cc.x_control, &cc.x_treat, bracket) {
        Err(survcop::Error::NoSignChange { .. }) => {
            println!("no crossing in ({}, {})", bracket.0, bracket.1);
            CrossingReport::NoCrossing {
                model: spec.label(),
                margin: cc.margin,
                x_control: cc.x_control,
                x_treat: cc.x_treat,
                bracket,
                message: "no crossing in bracket".into(),
            }
        }
        Err(e) => return Err(e.into()),
        Ok(_) => {
            let req = CrossingRequest {
                margin: j,
                x_control: cc.x_control.clone(),
                x_treat: cc.x_treat.clone(),
                bracket: Some(bracket),
                replicates: cc.replicates,
                level: cc.level,
                seed: opts.seed,
                workers: ctx.workers(&cfg),
            };
            let b = bootstrap_crossing(&data, &f, &req, &opts)?;
            println!(
                "crossing time {:.6}, {:.0}% interval ({:.6}, {:.6}); {} of {} resamples failed",
                b.point.time,
                100.0 * b.level,
                b.lower,
                b.upper,
                b.failures,
                cc.replicates
            );
            if b.unreliable {
                eprintln!("warning: more than 20% of the bootstrap resamples failed");
            }
            CrossingReport::Crossing {
                model: spec.label(),
                margin: cc.margin,
                x_control: cc.x_control,
                x_treat: cc.x_treat,
                result: b,
            }
        }
    };
    write_json(&out, &report)?;
    Ok(Status::Ok)
}

pub fn cmd_lrtest(ctx: &Context, reduced: &Path, full: &Path, data_path: &Path, level: Option<f64>) -> Result<Status> {
    let rcfg = RunConfig::load(reduced)?;
    let fcfg = RunConfig::load(full)?;
    let (rs, fs) = (rcfg.model_spec(reduced)?, fcfg.model_spec(full)?);
    let nested = rs.copula == fs.copula
        && rs.baseline == fs.baseline
        && rs.size == fs.size
        && fs.class == RegressionClass::Yp
        && rs.class != RegressionClass::Yp;
    if !nested {
        return Err(survcop::Error::NotNested(format!("{} is not nested in {}", rs.label(), fs.label())).into());
    }
    let level = level.or(fcfg.lrtest.as_ref().map(|l| l.level)).unwrap_or(0.05);
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::Input(format!("significance level {level} must lie in (0, 1)")));
    }
    let data = read_dataset(data_path)?;
    let opts = FitOptions { standard_errors: false, ..ctx.fit_options(&fcfg) };
    let r = fit(&data, rs, &opts)?;
    let fresh = fit(&data, fs, &opts)?;
    let warm = fit_full_from_reduced(&data, &[&r], &opts)?;
    let f = if warm.loglik > fresh.loglik && (warm.converged || !fresh.converged) { warm } else { fresh };
    let test = lr_test(&r, &f)?;
    let decision = if test.p_value < level { fs.class } else { rs.class };
    let converged = r.converged && f.converged;
    let report = LrReport {
        reduced: rs.label(),
        full: fs.label(),
        reduced_loglik: r.loglik,
        full_loglik: f.loglik,
        test,
        level,
        decision,
        converged,
    };
    write_json(&ctx.out_path(&fcfg, "lrtest.json"), &report)?;
    println!(
        "{} vs {}: LR {:.4} on {} df, p = {:.4e}; choose {}",
        report.reduced, report.full, test.stat, test.df, test.p_value, decision
    );
    Ok(Status::from_converged(converged))
}

pub fn cmd_prepare(ctx: &Context, input: &Path, output: &Path, standardize: bool) -> Result<Status> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
    let (data, summary) = prepare_csv(&text, input, standardize)?;
    let dir = ctx.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let path = dir.join(output);
    write_dataset(&path, &data)?;
    write_json(&dir.join("prepare.json"), &summary)?;
    println!(
        "{} subjects written to {}; {} progression and {} death events; {} tied",
        summary.subjects,
        path.display(),
        summary.events[0],
        summary.events[1],
        summary.ties.len()
    );
    Ok(Status::Ok)
}
