//! Parameter estimation: marginal fits, the two-step IFM estimator, full
//! maximum likelihood, and the parametric bootstrap.

mod bootstrap;
pub mod optim;

pub use bootstrap::{bootstrap, bootstrap_with_seeds, BootstrapConfig, BootstrapSummary};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::likelihood::panel_loglik;
use crate::model::{BcppModel, CopulaFamily, DistFamily, JumpSizeDist, LevyCopula, Margin};
use crate::simulate::IntervalPanel;
use optim::{golden_section, nelder_mead, Tolerances};

/// Estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    #[default]
    Ifm,
    FullMle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ifm => "ifm",
            Method::FullMle => "full-mle",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ifm" => Ok(Method::Ifm),
            "full-mle" | "mle" | "full_mle" => Ok(Method::FullMle),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected ifm or full-mle)"
            ))),
        }
    }
}

/// Optimizer settings. The defaults are the ones used throughout the tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub xtol: f64,
    pub ftol: f64,
    pub max_iter: usize,
    /// Coarse grid size for the one-dimensional copula search.
    pub grid_points: usize,
    /// Starting copula parameter.
    pub delta_init: f64,
    /// Nelder–Mead initial simplex offset, in transformed coordinates.
    pub simplex_spread: f64,
    /// Clayton `δ` range scanned by the coarse grid.
    pub clayton_range: (f64, f64),
    /// Range of `logit(δ/δ_max)` scanned for the pure common shock copula.
    pub logit_range: (f64, f64),
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-6,
            ftol: 1e-8,
            max_iter: 500,
            grid_points: 49,
            delta_init: 1.0,
            simplex_spread: 0.1,
            clayton_range: (1e-3, 1e3),
            logit_range: (-15.0, 15.0),
        }
    }
}

impl OptimizerOptions {
    fn tolerances(&self) -> Tolerances {
        Tolerances { xtol: self.xtol, ftol: self.ftol, max_iter: self.max_iter }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("optimizer option {what}")));
        if !(self.xtol > 0.0 && self.ftol > 0.0) {
            return bad("tolerances must be > 0");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1");
        }
        if self.grid_points < 3 {
            return bad("grid_points must be >= 3");
        }
        if !(self.delta_init > 0.0 && self.delta_init.is_finite()) {
            return bad("delta_init must be finite and > 0");
        }
        if !(self.simplex_spread > 0.0) {
            return bad("simplex_spread must be > 0");
        }
        let (lo, hi) = self.clayton_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return bad("clayton_range must satisfy 0 < lo < hi");
        }
        let (lo, hi) = self.logit_range;
        if !(hi > lo && lo.is_finite() && hi.is_finite()) {
            return bad("logit_range must satisfy lo < hi");
        }
        Ok(())
    }
}

/// Frequency and jump-size law fitted to one margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalFit {
    pub lambda: f64,
    pub dist: JumpSizeDist,
}

/// Maximizes the marginal likelihood of the jump sizes `s` observed over
/// `[0, T]`: `λ̂ = |s|/T`, and the jump-size law by its own MLE.
pub fn fit_marginal(s: &[f64], horizon: f64, family: DistFamily) -> Result<MarginalFit> {
    if s.is_empty() {
        return Err(Error::Input("cannot fit a margin without jumps".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Input(format!("horizon must be finite and > 0, got {horizon}")));
    }
    if let Some(bad) = s.iter().find(|&&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::Input(format!("jump sizes must be finite and > 0, found {bad}")));
    }
    let lambda = s.len() as f64 / horizon;
    let dist = match family {
        DistFamily::Exponential => {
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            JumpSizeDist::exponential(1.0 / mean)?
        }
        DistFamily::Weibull => {
            let (alpha, beta) = weibull_mle(s)?;
            JumpSizeDist::weibull(alpha, beta)?
        }
    };
    Ok(MarginalFit { lambda, dist })
}

/// Weibull MLE via the profile score in the shape `β`.
fn weibull_mle(s: &[f64]) -> Result<(f64, f64)> {
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == max {
        return Err(Error::Numeric("Weibull fit needs at least two distinct jump sizes".into()));
    }
    // the score is scale invariant; dividing by the maximum keeps s^β ≤ 1
    let logs: Vec<f64> = s.iter().map(|x| (x / max).ln()).collect();
    let n = logs.len() as f64;
    let mean_log = logs.iter().sum::<f64>() / n;

    // g(β) = 1/β + mean ln s − Σ s^β ln s / Σ s^β is strictly decreasing
    let score = |beta: f64| -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let w = (beta * l).exp();
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        let m1 = s1 / s0;
        let g = 1.0 / beta + mean_log - m1;
        let dg = -1.0 / (beta * beta) - (s2 / s0 - m1 * m1);
        (g, dg)
    };

    let (mut lo, mut hi) = (1.0, 1.0);
    while score(lo).0 <= 0.0 {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(Error::Numeric("Weibull shape score has no root above 1e-12".into()));
        }
    }
    while score(hi).0 >= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numeric("Weibull shape score has no root below 1e12".into()));
        }
    }
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (g, dg) = score(beta);
        if g > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = beta - g / dg;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - beta).abs() <= 1e-14 * beta {
            beta = next;
            break;
        }
        beta = next;
    }
    let mean_pow = logs.iter().map(|l| (beta * l).exp()).sum::<f64>() / n;
    let alpha = max * mean_pow.powf(1.0 / beta);
    Ok((alpha, beta))
}

/// Result of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub method: Method,
    pub model: BcppModel,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitReport {
    /// `(name, value)` pairs in [`parameter_names`] order.
    pub fn estimates(&self) -> Vec<(String, f64)> {
        parameter_names(&self.model).into_iter().zip(parameter_values(&self.model)).collect()
    }
}

/// `lambda1, <margin 1 params>, lambda2, <margin 2 params>, delta`.
pub fn parameter_names(m: &BcppModel) -> Vec<String> {
    let mut names = vec!["lambda1".to_string()];
    names.extend(m.dist(Margin::First).family().param_names(1));
    names.push("lambda2".into());
    names.extend(m.dist(Margin::Second).family().param_names(2));
    names.push("delta".into());
    names
}

pub fn parameter_values(m: &BcppModel) -> Vec<f64> {
    let mut v = vec![m.lambda(Margin::First)];
    v.extend(m.dist(Margin::First).params());
    v.push(m.lambda(Margin::Second));
    v.extend(m.dist(Margin::Second).params());
    v.push(m.copula().delta());
    v
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Upper end of the admissible pure-common-shock range.
fn pcs_delta_max(l1: f64, l2: f64) -> f64 {
    (1.0 / l1).min(1.0 / l2)
}

/// Maps the copula parameter to the real line.
fn copula_to_t(family: CopulaFamily, delta: f64, l1: f64, l2: f64) -> f64 {
    match family {
        CopulaFamily::Clayton => delta.ln(),
        CopulaFamily::PureCommonShock => logit(delta / pcs_delta_max(l1, l2)),
    }
}

fn copula_from_t(family: CopulaFamily, t: f64, l1: f64, l2: f64) -> Result<LevyCopula> {
    match family {
        CopulaFamily::Clayton => LevyCopula::clayton(t.exp()),
        CopulaFamily::PureCommonShock => {
            LevyCopula::pure_common_shock(pcs_delta_max(l1, l2) * sigmoid(t))
        }
    }
}

/// Negative log-likelihood; `+∞` wherever the model cannot be built.
fn objective(model: Result<BcppModel>, panel: &IntervalPanel) -> f64 {
    match model.and_then(|m| panel_loglik(&m, panel)) {
        Ok(v) if !v.is_nan() => -v,
        _ => f64::INFINITY,
    }
}

/// Maximizes the panel likelihood over the copula parameter with both
/// margins held fixed.
pub fn fit_copula_ifm(
    panel: &IntervalPanel,
    margin1: &MarginalFit,
    margin2: &MarginalFit,
    family: CopulaFamily,
    options: &OptimizerOptions,
) -> Result<FitReport> {
    options.validate()?;
    let (l1, l2) = (margin1.lambda, margin2.lambda);
    let build = |t: f64| -> Result<BcppModel> {
        let c = copula_from_t(family, t, l1, l2)?;
        BcppModel::new(l1, margin1.dist, l2, margin2.dist, c)
    };
    let f = |t: f64| objective(build(t), panel);

    let (lo, hi) = match family {
        CopulaFamily::Clayton => (options.clayton_range.0.ln(), options.clayton_range.1.ln()),
        CopulaFamily::PureCommonShock => options.logit_range,
    };
    let init_delta = match family {
        CopulaFamily::Clayton => options.delta_init,
        // the default start may lie outside the admissible range
        CopulaFamily::PureCommonShock => {
            let max = pcs_delta_max(l1, l2);
            if options.delta_init < max { options.delta_init } else { 0.5 * max }
        }
    };
    let t_init = copula_to_t(family, init_delta, l1, l2);

    let steps = options.grid_points - 1;
    let mut grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    if t_init.is_finite() {
        grid.push(t_init);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("grid is nonempty");
    if !values[best].is_finite() {
        return Err(Error::Numeric(format!(
            "panel likelihood is -inf for every {family} parameter on the search grid"
        )));
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section(f, a, b, &options.tolerances());
    let (t, fx) = if refined.fx <= values[best] {
        (refined.x[0], refined.fx)
    } else {
        (grid[best], values[best])
    };
    Ok(FitReport {
        method: Method::Ifm,
        model: build(t)?,
        loglik: -fx,
        converged: refined.converged,
        iterations: refined.iterations,
    })
}

/// Two-step IFM: margins from the jump-size vectors, then the copula from the
/// panel.
pub fn fit_ifm(
    panel: &IntervalPanel,
    s1: &[f64],
    s2: &[f64],
    families: [DistFamily; 2],
    copula: CopulaFamily,
    options: &OptimizerOptions,
) -> Result<FitReport> {
    let m1 = fit_marginal(s1, panel.horizon(), families[0])?;
    let m2 = fit_marginal(s2, panel.horizon(), families[1])?;
    fit_copula_ifm(panel, &m1, &m2, copula, options)
}

fn to_coordinates(m: &BcppModel) -> Vec<f64> {
    let (l1, l2) = (m.lambda(Margin::First), m.lambda(Margin::Second));
    let mut x = vec![l1.ln()];
    x.extend(m.dist(Margin::First).params().iter().map(|p| p.ln()));
    x.push(l2.ln());
    x.extend(m.dist(Margin::Second).params().iter().map(|p| p.ln()));
    x.push(copula_to_t(m.copula().family(), m.copula().delta(), l1, l2));
    x
}

fn from_coordinates(
    x: &[f64],
    families: [DistFamily; 2],
    copula: CopulaFamily,
) -> Result<BcppModel> {
    let n1 = families[0].n_params();
    let n2 = families[1].n_params();
    let exp = |v: &[f64]| v.iter().map(|t| t.exp()).collect::<Vec<_>>();
    let l1 = x[0].exp();
    let d1 = JumpSizeDist::from_params(families[0], &exp(&x[1..1 + n1]))?;
    let l2 = x[1 + n1].exp();
    let d2 = JumpSizeDist::from_params(families[1], &exp(&x[2 + n1..2 + n1 + n2]))?;
    let c = copula_from_t(copula, x[2 + n1 + n2], l1, l2)?;
    BcppModel::new(l1, d1, l2, d2, c)
}

/// Maximizes the panel likelihood over all parameters at once, starting from
/// `init` (typically the IFM estimate).
pub fn fit_full_mle(
    panel: &IntervalPanel,
    init: &BcppModel,
    options: &OptimizerOptions,
) -> Result<FitReport> {
    options.validate()?;
    let families = [init.dist(Margin::First).family(), init.dist(Margin::Second).family()];
    let copula = init.copula().family();
    let x0 = to_coordinates(init);
    let f = |x: &[f64]| objective(from_coordinates(x, families, copula), panel);
    if !f(&x0).is_finite() {
        return Err(Error::Numeric("panel likelihood is -inf at the starting point".into()));
    }
    let min = nelder_mead(f, &x0, options.simplex_spread, &options.tolerances());
    Ok(FitReport {
        method: Method::FullMle,
        model: from_coordinates(&min.x, families, copula)?,
        loglik: -min.fx,
        converged: min.converged,
        iterations: min.iterations,
    })
}

/// Fits by `method`; full MLE starts from the IFM estimate.
pub fn fit(
    panel: &IntervalPanel,
    s1: &[f64],
    s2: &[f64],
    families: [DistFamily; 2],
    copula: CopulaFamily,
    method: Method,
    options: &OptimizerOptions,
) -> Result<FitReport> {
    let ifm = fit_ifm(panel, s1, s2, families, copula, options)?;
    match method {
        Method::Ifm => Ok(ifm),
        Method::FullMle => fit_full_mle(panel, &ifm.model, options),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{aggregate, marginal_jump_vectors, sample_path};

    #[test]
    fn exponential_closed_form() {
        let f = fit_marginal(&[1.0, 1.0, 1.0], 1.0, DistFamily::Exponential).unwrap();
        assert_eq!(f.lambda, 3.0);
        assert_eq!(f.dist, JumpSizeDist::exponential(1.0).unwrap());
        assert!(fit_marginal(&[], 1.0, DistFamily::Exponential).is_err());
        assert!(fit_marginal(&[1.0, -2.0], 1.0, DistFamily::Weibull).is_err());
    }

    #[test]
    fn weibull_mle_solves_score_and_beats_neighbours() {
        let s = [0.3, 1.7, 0.9, 2.4, 0.05, 1.1, 0.6, 3.2, 0.75, 1.4];
        let fitted = fit_marginal(&s, 2.0, DistFamily::Weibull).unwrap();
        let ll = |a: f64, b: f64| {
            let d = JumpSizeDist::weibull(a, b).unwrap();
            s.iter().map(|&x| d.ln_pdf(x)).sum::<f64>()
        };
        let (a, b) = match fitted.dist {
            JumpSizeDist::Weibull { alpha, beta } => (alpha, beta),
            _ => unreachable!(),
        };
        let best = ll(a, b);
        for &(da, db) in &[(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(ll(a * (1.0 + da), b * (1.0 + db)) < best);
        }
        // scale equivariance
        let scaled: Vec<f64> = s.iter().map(|x| 1e6 * x).collect();
        let g = fit_marginal(&scaled, 2.0, DistFamily::Weibull).unwrap();
        let (a2, b2) = match g.dist {
            JumpSizeDist::Weibull { alpha, beta } => (alpha, beta),
            _ => unreachable!(),
        };
        assert!((b2 - b).abs() < 1e-10 * b && (a2 - 1e6 * a).abs() < 1e-9 * a2);
    }

    #[test]
    fn weibull_recovers_large_sample_parameters() {
        let d = JumpSizeDist::weibull(0.818, 1.197).unwrap();
        let s: Vec<f64> = (1..=20_000).map(|i| d.quantile(i as f64 / 20_001.0).unwrap()).collect();
        let f = fit_marginal(&s, 1.0, DistFamily::Weibull).unwrap();
        match f.dist {
            JumpSizeDist::Weibull { alpha, beta } => {
                assert!((alpha - 0.818).abs() < 5e-3 && (beta - 1.197).abs() < 1e-2);
            }
            _ => unreachable!(),
        }
    }

    fn simulated(delta: f64, seed: u64) -> (IntervalPanel, Vec<f64>, Vec<f64>) {
        let e = JumpSizeDist::exponential(1.0).unwrap();
        let m = BcppModel::new(200.0, e, 200.0, e, LevyCopula::clayton(delta).unwrap()).unwrap();
        let path = sample_path(&m, 1.0, seed).unwrap();
        let panel = aggregate(&path, 1.0, 50).unwrap();
        let (s1, s2) = marginal_jump_vectors(&path);
        (panel, s1, s2)
    }

    #[test]
    fn ifm_is_locally_optimal() {
        let (panel, s1, s2) = simulated(1.0, 3);
        let fams = [DistFamily::Exponential; 2];
        let r = fit_ifm(&panel, &s1, &s2, fams, CopulaFamily::Clayton, &OptimizerOptions::default())
            .unwrap();
        assert!(r.converged);
        let delta = r.model.copula().delta();
        for factor in [1.0 - 1e-3, 1.0 + 1e-3] {
            let other = r.model.with_copula(LevyCopula::clayton(delta * factor).unwrap()).unwrap();
            assert!(panel_loglik(&other, &panel).unwrap() <= r.loglik + 1e-9);
        }
        assert!(delta > 0.3 && delta < 3.0, "{delta}");
    }

    #[test]
    fn ifm_margins_ignore_the_partition() {
        let e = JumpSizeDist::exponential(1.0).unwrap();
        let m = BcppModel::new(200.0, e, 200.0, e, LevyCopula::clayton(1.0).unwrap()).unwrap();
        let path = sample_path(&m, 1.0, 8).unwrap();
        let (s1, s2) = marginal_jump_vectors(&path);
        let fams = [DistFamily::Exponential; 2];
        let opts = OptimizerOptions::default();
        let a = fit_ifm(&aggregate(&path, 1.0, 20).unwrap(), &s1, &s2, fams, CopulaFamily::Clayton, &opts)
            .unwrap();
        let b = fit_ifm(&aggregate(&path, 1.0, 80).unwrap(), &s1, &s2, fams, CopulaFamily::Clayton, &opts)
            .unwrap();
        let (pa, pb) = (parameter_values(&a.model), parameter_values(&b.model));
        assert_eq!(pa[..4], pb[..4]);
    }

    #[test]
    fn pure_common_shock_ifm_stays_admissible() {
        let (panel, s1, s2) = simulated(1.0, 5);
        let fams = [DistFamily::Exponential; 2];
        let r = fit_ifm(&panel, &s1, &s2, fams, CopulaFamily::PureCommonShock, &OptimizerOptions::default())
            .unwrap();
        let d = r.model.copula().delta();
        let max = pcs_delta_max(r.model.lambda(Margin::First), r.model.lambda(Margin::Second));
        assert!(d > 0.0 && d < max);
    }

    #[test]
    fn full_mle_does_not_lose_ground() {
        let (panel, s1, s2) = simulated(1.0, 4);
        let fams = [DistFamily::Exponential; 2];
        let opts = OptimizerOptions::default();
        let ifm = fit_ifm(&panel, &s1, &s2, fams, CopulaFamily::Clayton, &opts).unwrap();
        let full = fit_full_mle(&panel, &ifm.model, &opts).unwrap();
        assert!(full.loglik >= ifm.loglik);
        assert_eq!(full.method, Method::FullMle);
        let names = full.estimates().into_iter().map(|(n, _)| n).collect::<Vec<_>>();
        assert_eq!(names, ["lambda1", "theta1", "lambda2", "theta2", "delta"]);
    }

    #[test]
    fn coordinates_round_trip() {
        let m = BcppModel::new(
            71.1,
            JumpSizeDist::weibull(0.818, 1.197).unwrap(),
            41.5,
            JumpSizeDist::weibull(1.036, 1.131).unwrap(),
            LevyCopula::pure_common_shock(0.01).unwrap(),
        )
        .unwrap();
        let x = to_coordinates(&m);
        let back = from_coordinates(&x, [DistFamily::Weibull; 2], CopulaFamily::PureCommonShock).unwrap();
        for (a, b) in parameter_values(&m).iter().zip(parameter_values(&back)) {
            assert!((a - b).abs() < 1e-12 * a.abs());
        }
    }
}
