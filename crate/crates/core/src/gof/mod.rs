//! Goodness-of-fit transform and test battery for a fitted model and panel.
//!
//! Each row with jumps in both margins is mapped to a pair of probabilities
//! `(u₁, u₂) = (G_{k,l}(x, ∞), H_{x,k,l}(y))`. Under a correctly specified
//! model these are independent uniforms, so `w = Φ⁻¹(u)` should look like iid
//! standard normal draws.

mod normal;

pub use normal::{norm_cdf, norm_ppf};

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::likelihood::{log_sum_exp, poisson_triplet_logprob, pow_ln};
use crate::model::{clamp_probability, BcppModel, Margin};
use crate::simulate::IntervalPanel;

/// Logs of the three distribution functions at `(x, y)`; infinite arguments
/// are allowed.
struct CdfLogs {
    c1: f64,
    c2: f64,
    par: f64,
}

impl CdfLogs {
    fn at(m: &BcppModel, x: f64, y: f64, need_par: bool) -> Result<Self> {
        let par = if need_par && m.lambda_parallel() > 0.0 {
            m.cdf_parallel(x, y)?.ln()
        } else {
            f64::NEG_INFINITY
        };
        Ok(Self {
            c1: m.cdf_perp(Margin::First, x)?.ln(),
            c2: m.cdf_perp(Margin::Second, y)?.ln(),
            par,
        })
    }
}

fn common_range(m: &BcppModel, k: u32, l: u32) -> u32 {
    if m.lambda_parallel() > 0.0 {
        k.min(l)
    } else {
        0
    }
}

fn ln_f_kl(m: &BcppModel, dt: f64, k: u32, l: u32, x: f64, y: f64) -> Result<f64> {
    let top = common_range(m, k, l);
    let logs = CdfLogs::at(m, x, y, top > 0)?;
    let mut terms = Vec::with_capacity(top as usize + 1);
    for n in 0..=top {
        let lp = poisson_triplet_logprob(m, dt, k - n, l - n, n);
        if lp == f64::NEG_INFINITY {
            continue;
        }
        terms.push(lp + pow_ln(k - n, logs.c1) + pow_ln(l - n, logs.c2) + pow_ln(n, logs.par));
    }
    Ok(log_sum_exp(&terms))
}

/// `F_{k,l}(x, y) = P(Ñ₁ = k, Ñ₂ = l, Z₁ ≤ x, Z₂ ≤ y)` for an interval of
/// length `dt`.
pub fn f_kl(m: &BcppModel, dt: f64, k: u32, l: u32, x: f64, y: f64) -> Result<f64> {
    check_dt(dt)?;
    Ok(ln_f_kl(m, dt, k, l, x, y)?.exp())
}

/// `G_{k,l}(x, y) = F_{k,l}(x, y) / F_{k,l}(∞, ∞)`.
pub fn g_kl(m: &BcppModel, dt: f64, k: u32, l: u32, x: f64, y: f64) -> Result<f64> {
    check_dt(dt)?;
    let denom = ln_f_kl(m, dt, k, l, f64::INFINITY, f64::INFINITY)?;
    if denom == f64::NEG_INFINITY {
        return Err(Error::Domain(format!("count cell ({k}, {l}) has zero probability")));
    }
    let num = ln_f_kl(m, dt, k, l, x, y)?;
    clamp_probability((num - denom).exp(), "G_kl")
}

/// `ln ∂F_{k,l}(x, y)/∂x`.
fn ln_dx_f_kl(m: &BcppModel, dt: f64, k: u32, l: u32, x: f64, y: f64) -> Result<f64> {
    let top = common_range(m, k, l);
    let logs = CdfLogs::at(m, x, y, top > 0)?;
    let ln_f1 = m.density_perp(Margin::First, x)?.ln();
    let ln_d1 = if top > 0 { m.parallel_partials(x, y)?.d1.ln() } else { f64::NEG_INFINITY };
    let mut terms = Vec::with_capacity(2 * top as usize + 2);
    for n in 0..=top {
        let lp = poisson_triplet_logprob(m, dt, k - n, l - n, n);
        if lp == f64::NEG_INFINITY {
            continue;
        }
        let a = k - n;
        let b = l - n;
        if a > 0 {
            terms.push(
                lp + f64::from(a).ln()
                    + ln_f1
                    + pow_ln(a - 1, logs.c1)
                    + pow_ln(b, logs.c2)
                    + pow_ln(n, logs.par),
            );
        }
        if n > 0 {
            terms.push(
                lp + f64::from(n).ln()
                    + ln_d1
                    + pow_ln(a, logs.c1)
                    + pow_ln(b, logs.c2)
                    + pow_ln(n - 1, logs.par),
            );
        }
    }
    Ok(log_sum_exp(&terms))
}

/// `H_{x,k,l}(y) = ∂ₓF_{k,l}(x, y) / ∂ₓF_{k,l}(x, ∞)`, the law of the second
/// maximum given the first.
pub fn h_xkl(m: &BcppModel, dt: f64, x: f64, k: u32, l: u32, y: f64) -> Result<f64> {
    check_dt(dt)?;
    if k == 0 {
        return Err(Error::Domain("H_xkl needs k >= 1".into()));
    }
    let denom = ln_dx_f_kl(m, dt, k, l, x, f64::INFINITY)?;
    if denom == f64::NEG_INFINITY {
        return Err(Error::Domain(format!(
            "observation x = {x} with counts ({k}, {l}) lies outside the model support"
        )));
    }
    let num = ln_dx_f_kl(m, dt, k, l, x, y)?;
    clamp_probability((num - denom).exp(), "H_xkl")
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("interval length must be > 0, got {dt}")))
    }
}

/// Probabilities `v` and normal scores `w` of the rows with jumps in both
/// margins.
#[derive(Debug, Clone, PartialEq)]
pub struct GofTransform {
    /// Panel row (0-based) each transformed row came from.
    pub rows: Vec<usize>,
    pub v: Vec<[f64; 2]>,
    pub w: Vec<[f64; 2]>,
}

/// Keeps a probability strictly inside (0, 1) so that `Φ⁻¹` stays finite.
fn interior(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn gof_transform(m: &BcppModel, panel: &IntervalPanel) -> Result<GofTransform> {
    let dt = panel.dt();
    let rows: Vec<usize> = panel
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, n)| n[0] > 0 && n[1] > 0)
        .map(|(i, _)| i)
        .collect();
    let v: Vec<[f64; 2]> = rows
        .par_iter()
        .map(|&i| {
            let [x, y] = panel.maxima()[i];
            let [k, l] = panel.counts()[i];
            let u1 = g_kl(m, dt, k, l, x, f64::INFINITY)?;
            let u2 = h_xkl(m, dt, x, k, l, y)?;
            Ok([interior(u1), interior(u2)])
        })
        .collect::<Result<_>>()?;
    let w = v.iter().map(|r| [norm_ppf(r[0]), norm_ppf(r[1])]).collect();
    Ok(GofTransform { rows, v, w })
}

/// Statistics of the normal-score matrix, each with its p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub rows: usize,
    pub jb: [f64; 2],
    pub jb_p: [f64; 2],
    pub mean: [f64; 2],
    pub mean_p: [f64; 2],
    pub sd: [f64; 2],
    pub sd_p: [f64; 2],
    pub rho: [f64; 2],
    pub rho_p: [f64; 2],
    pub rho12: f64,
    pub rho12_p: f64,
}

impl GofReport {
    /// `(name, statistic, p-value)` in table order.
    pub fn entries(&self) -> Vec<(&'static str, f64, f64)> {
        vec![
            ("JB1", self.jb[0], self.jb_p[0]),
            ("JB2", self.jb[1], self.jb_p[1]),
            ("mu1", self.mean[0], self.mean_p[0]),
            ("mu2", self.mean[1], self.mean_p[1]),
            ("sigma1", self.sd[0], self.sd_p[0]),
            ("sigma2", self.sd[1], self.sd_p[1]),
            ("rho1", self.rho[0], self.rho_p[0]),
            ("rho2", self.rho[1], self.rho_p[1]),
            ("rho12", self.rho12, self.rho12_p),
        ]
    }
}

/// Two-sided p-value of a statistic that is `N(0, 1)` under the null.
fn two_sided(z: f64) -> f64 {
    2.0 * norm_cdf(-z.abs())
}

struct ColumnStats {
    mean: f64,
    /// Central moments with denominator `n`.
    m2: f64,
    m3: f64,
    m4: f64,
    lag1: f64,
}

fn column_stats(x: &[f64]) -> ColumnStats {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &xi in x {
        let d = xi - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let lag: f64 = x.windows(2).map(|p| (p[0] - mean) * (p[1] - mean)).sum();
    let lag1 = lag / m2;
    ColumnStats { mean, m2: m2 / n, m3: m3 / n, m4: m4 / n, lag1 }
}

/// Jarque–Bera, mean, SD, lag-1 autocorrelation per column and the
/// cross-column correlation, tested against iid standard normality.
///
/// p-values: JB against χ²(2); mean via `μ̂√n ~ N(0,1)`, two-sided; SD via
/// `(n−1)σ̂² ~ χ²(n−1)`, one-sided in the direction of the deviation from 1;
/// correlations via `ρ̂√n ~ N(0,1)`, two-sided.
pub fn gof_tests(w: &[[f64; 2]]) -> Result<GofReport> {
    let n = w.len();
    if n < 8 {
        return Err(Error::Input(format!("goodness-of-fit tests need >= 8 rows, got {n}")));
    }
    let nf = n as f64;
    let cols = [
        w.iter().map(|r| r[0]).collect::<Vec<_>>(),
        w.iter().map(|r| r[1]).collect::<Vec<_>>(),
    ];
    let chi2_2 = ChiSquared::new(2.0).expect("valid degrees of freedom");
    let chi2_n = ChiSquared::new(nf - 1.0).expect("valid degrees of freedom");

    let mut report = GofReport {
        rows: n,
        jb: [0.0; 2],
        jb_p: [0.0; 2],
        mean: [0.0; 2],
        mean_p: [0.0; 2],
        sd: [0.0; 2],
        sd_p: [0.0; 2],
        rho: [0.0; 2],
        rho_p: [0.0; 2],
        rho12: 0.0,
        rho12_p: 0.0,
    };
    let mut stats = Vec::with_capacity(2);
    for (j, col) in cols.iter().enumerate() {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("column {} has non-finite scores", j + 1)));
        }
        let s = column_stats(col);
        if !(s.m2 > 0.0) {
            return Err(Error::Numeric(format!("column {} has zero variance", j + 1)));
        }
        let skew = s.m3 / s.m2.powf(1.5);
        let kurt = s.m4 / (s.m2 * s.m2);
        report.jb[j] = nf * (skew * skew / 6.0 + (kurt - 3.0).powi(2) / 24.0);
        report.jb_p[j] = chi2_2.sf(report.jb[j]);
        report.mean[j] = s.mean;
        report.mean_p[j] = two_sided(s.mean * nf.sqrt());
        let var = s.m2 * nf / (nf - 1.0);
        report.sd[j] = var.sqrt();
        let q = (nf - 1.0) * var;
        report.sd_p[j] = if var >= 1.0 { chi2_n.sf(q) } else { chi2_n.cdf(q) };
        report.rho[j] = s.lag1;
        report.rho_p[j] = two_sided(s.lag1 * nf.sqrt());
        stats.push(s);
    }
    let cross: f64 = cols[0]
        .iter()
        .zip(&cols[1])
        .map(|(a, b)| (a - stats[0].mean) * (b - stats[1].mean))
        .sum::<f64>()
        / nf;
    report.rho12 = cross / (stats[0].m2 * stats[1].m2).sqrt();
    report.rho12_p = two_sided(report.rho12 * nf.sqrt());
    Ok(report)
}
