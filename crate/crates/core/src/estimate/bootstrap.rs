//! Parametric bootstrap: simulate from a model, refit, summarize.

use rayon::prelude::*;

use super::{fit, parameter_names, parameter_values, Method, OptimizerOptions};
use crate::error::{Error, Result};
use crate::model::{BcppModel, Margin};
use crate::simulate::{aggregate, marginal_jump_vectors, sample_path, substream_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub horizon: f64,
    pub intervals: usize,
    pub replicates: usize,
    pub method: Method,
    pub master_seed: u64,
    pub options: OptimizerOptions,
    /// Worker cap; `None` uses the global thread pool.
    pub jobs: Option<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            intervals: 100,
            replicates: 100,
            method: Method::Ifm,
            master_seed: 0,
            options: OptimizerOptions::default(),
            jobs: None,
        }
    }
}

/// Share of failed replicates above which the summary carries a warning.
const FAILURE_WARNING_SHARE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub names: Vec<String>,
    /// Parameters of the generating model.
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Replicates attempted.
    pub replicates: usize,
    /// Replicates excluded because the fit failed or did not converge.
    pub failures: Vec<(usize, String)>,
    pub warning: bool,
    pub method: Method,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    /// Estimates of the successful replicates, in replicate order.
    pub estimates: Vec<Vec<f64>>,
}

impl BootstrapSummary {
    pub fn successes(&self) -> usize {
        self.estimates.len()
    }
}

fn replicate(m: &BcppModel, cfg: &BootstrapConfig, seed: u64) -> Result<Vec<f64>> {
    let path = sample_path(m, cfg.horizon, seed)?;
    let panel = aggregate(&path, cfg.horizon, cfg.intervals)?;
    let (s1, s2) = marginal_jump_vectors(&path);
    let families = [m.dist(Margin::First).family(), m.dist(Margin::Second).family()];
    let report = fit(&panel, &s1, &s2, families, m.copula().family(), cfg.method, &cfg.options)?;
    if !report.converged {
        return Err(Error::Numeric(format!(
            "optimizer did not converge in {} iterations",
            report.iterations
        )));
    }
    Ok(parameter_values(&report.model))
}

/// Runs `R` replicates with seeds derived from the master seed.
pub fn bootstrap(m: &BcppModel, cfg: &BootstrapConfig) -> Result<BootstrapSummary> {
    let seeds: Vec<u64> = (0..cfg.replicates as u64)
        .map(|r| substream_seed(cfg.master_seed, r))
        .collect();
    bootstrap_with_seeds(m, cfg, &seeds)
}

/// Runs one replicate per supplied seed.
pub fn bootstrap_with_seeds(
    m: &BcppModel,
    cfg: &BootstrapConfig,
    seeds: &[u64],
) -> Result<BootstrapSummary> {
    if seeds.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least 2 replicates, got {}",
            seeds.len()
        )));
    }
    if cfg.intervals == 0 || !(cfg.horizon.is_finite() && cfg.horizon > 0.0) {
        return Err(Error::InvalidParameter("horizon and interval count must be positive".into()));
    }
    cfg.options.validate()?;

    let run = || -> Vec<Result<Vec<f64>>> {
        seeds.par_iter().map(|&s| replicate(m, cfg, s)).collect()
    };
    let outcomes = match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => estimates.push(v),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if estimates.len() < 2 {
        return Err(Error::Numeric(format!(
            "only {} of {} bootstrap replicates succeeded",
            estimates.len(),
            seeds.len()
        )));
    }
    let k = estimates[0].len();
    let r = estimates.len() as f64;
    let mean: Vec<f64> = (0..k).map(|j| estimates.iter().map(|e| e[j]).sum::<f64>() / r).collect();
    let sd: Vec<f64> = (0..k)
        .map(|j| {
            let ss: f64 = estimates.iter().map(|e| (e[j] - mean[j]).powi(2)).sum();
            (ss / (r - 1.0)).sqrt()
        })
        .collect();
    Ok(BootstrapSummary {
        names: parameter_names(m),
        truth: parameter_values(m),
        mean,
        sd,
        replicates: seeds.len(),
        warning: failures.len() as f64 > FAILURE_WARNING_SHARE * seeds.len() as f64,
        failures,
        method: cfg.method,
        master_seed: cfg.master_seed,
        seeds: seeds.to_vec(),
        estimates,
    })
}
