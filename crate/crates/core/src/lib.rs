//! Bivariate compound Poisson processes whose jump dependence is described by
//! a Lévy copula.
//!
//! The library covers exact simulation, the likelihood of panels of interval
//! maxima and counts, IFM and full maximum-likelihood estimation with a
//! parametric bootstrap, a goodness-of-fit transform with its test battery,
//! and preprocessing of raw loss files into panels.

pub mod error;
pub mod estimate;
pub mod gof;
pub mod ingest;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod simulate;

pub use error::{Error, Result};
pub use estimate::{
    bootstrap, fit, fit_copula_ifm, fit_full_mle, fit_ifm, fit_marginal, BootstrapConfig,
    BootstrapSummary, FitReport, MarginalFit, Method, OptimizerOptions,
};
pub use gof::{gof_tests, gof_transform, GofReport};
pub use likelihood::{cell_loglik, panel_loglik, CellObservation};
pub use model::{
    BcppModel, CopulaFamily, DistFamily, JumpSizeDist, LevyCopula, Margin, ModelOptions,
};
pub use simulate::{aggregate, marginal_jump_vectors, sample_path, EventRecord, IntervalPanel};
