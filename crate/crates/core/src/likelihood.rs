//! Log-likelihood of an interval panel of maxima and counts.
//!
//! In each interval the counts of the three subprocesses are independent
//! Poisson variables. Given the counts, the maxima have a distribution
//! function that is a product of powers of `F₁⊥`, `F₂⊥` and `F∥`. The cell
//! likelihood is that distribution's density in the observed maxima, summed
//! over the unobserved number of common shocks.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{BcppModel, Margin};
use crate::simulate::IntervalPanel;

/// One row of a panel: maxima `(x, y)` and counts `(k, l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellObservation {
    pub x: f64,
    pub y: f64,
    pub k: u32,
    pub l: u32,
}

impl CellObservation {
    pub fn new(x: f64, y: f64, k: u32, l: u32) -> Result<Self> {
        for (name, v, c) in [("x", x, k), ("y", y, l)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!("{name} = {v} must be finite and >= 0")));
            }
            if (c == 0) != (v == 0.0) {
                return Err(Error::Input(format!("{name} = {v} inconsistent with count {c}")));
            }
        }
        Ok(Self { x, y, k, l })
    }
}

/// `e · ln x` with the convention `0 · ln 0 = 0` (i.e. `0⁰ = 1`).
#[inline]
pub(crate) fn pow_ln(e: u32, ln_x: f64) -> f64 {
    if e == 0 {
        0.0
    } else {
        f64::from(e) * ln_x
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn poisson_ln_pmf(k: u32, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let k = f64::from(k);
    k * mean.ln() - mean - ln_gamma(k + 1.0)
}

/// `ln P(Ñ₁⊥ = k1, Ñ₂⊥ = k2, Ñ∥ = kc)` over an interval of length `dt`.
pub fn poisson_triplet_logprob(m: &BcppModel, dt: f64, k1: u32, k2: u32, kc: u32) -> f64 {
    poisson_ln_pmf(k1, m.lambda_perp(Margin::First) * dt)
        + poisson_ln_pmf(k2, m.lambda_perp(Margin::Second) * dt)
        + poisson_ln_pmf(kc, m.lambda_parallel() * dt)
}

/// Logs of `F∥`, `F₁∥`, `F₂∥`, `f∥` at one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ParallelLogs {
    pub cdf: f64,
    pub d1: f64,
    pub d2: f64,
    pub density: f64,
}

impl ParallelLogs {
    pub fn at(m: &BcppModel, x: f64, y: f64) -> Result<Self> {
        let p = m.parallel_partials(x, y)?;
        Ok(Self {
            cdf: m.cdf_parallel(x, y)?.ln(),
            d1: p.d1.ln(),
            d2: p.d2.ln(),
            density: p.density.ln(),
        })
    }
}

/// Log of the summand of the five-term double derivative for a given number
/// of common shocks `n`, without the Poisson factor.
#[allow(clippy::too_many_arguments)]
fn double_derivative_ln(
    k: u32,
    l: u32,
    n: u32,
    ln_f1: f64,
    ln_f2: f64,
    ln_c1: f64,
    ln_c2: f64,
    par: Option<&ParallelLogs>,
) -> f64 {
    let a = k - n;
    let b = l - n;
    let mut terms = [f64::NEG_INFINITY; 5];
    if a > 0 && b > 0 {
        let pf = f64::from(a) * f64::from(b);
        let cpar = par.map_or(0.0, |p| pow_ln(n, p.cdf));
        terms[0] = pf.ln() + ln_f1 + ln_f2 + pow_ln(a - 1, ln_c1) + pow_ln(b - 1, ln_c2) + cpar;
    }
    if n > 0 {
        let p = par.expect("parallel factors are evaluated whenever n > 0");
        let nf = f64::from(n);
        if b > 0 {
            terms[1] = (nf * f64::from(b)).ln()
                + ln_f2
                + p.d1
                + pow_ln(a, ln_c1)
                + pow_ln(b - 1, ln_c2)
                + pow_ln(n - 1, p.cdf);
        }
        if a > 0 {
            terms[2] = (nf * f64::from(a)).ln()
                + ln_f1
                + p.d2
                + pow_ln(b, ln_c2)
                + pow_ln(a - 1, ln_c1)
                + pow_ln(n - 1, p.cdf);
        }
        if n > 1 {
            terms[3] = (nf * (nf - 1.0)).ln()
                + p.d1
                + p.d2
                + pow_ln(a, ln_c1)
                + pow_ln(b, ln_c2)
                + pow_ln(n - 2, p.cdf);
        }
        terms[4] = nf.ln() + p.density + pow_ln(a, ln_c1) + pow_ln(b, ln_c2) + pow_ln(n - 1, p.cdf);
    }
    log_sum_exp(&terms)
}

/// Log-likelihood contribution of one interval of length `dt`.
pub fn cell_loglik(m: &BcppModel, obs: &CellObservation, dt: f64) -> Result<f64> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Input(format!("interval length must be > 0, got {dt}")));
    }
    let CellObservation { x, y, k, l } = *obs;
    match (k, l) {
        (0, 0) => Ok(poisson_triplet_logprob(m, dt, 0, 0, 0)),
        (_, 0) => {
            let ln_c1 = m.cdf_perp(Margin::First, x)?.ln();
            let ln_f1 = m.density_perp(Margin::First, x)?.ln();
            Ok(poisson_triplet_logprob(m, dt, k, 0, 0)
                + f64::from(k).ln()
                + pow_ln(k - 1, ln_c1)
                + ln_f1)
        }
        (0, _) => {
            let ln_c2 = m.cdf_perp(Margin::Second, y)?.ln();
            let ln_f2 = m.density_perp(Margin::Second, y)?.ln();
            Ok(poisson_triplet_logprob(m, dt, 0, l, 0)
                + f64::from(l).ln()
                + pow_ln(l - 1, ln_c2)
                + ln_f2)
        }
        _ => {
            let ln_c1 = m.cdf_perp(Margin::First, x)?.ln();
            let ln_c2 = m.cdf_perp(Margin::Second, y)?.ln();
            let ln_f1 = m.density_perp(Margin::First, x)?.ln();
            let ln_f2 = m.density_perp(Margin::Second, y)?.ln();
            let par = if m.lambda_parallel() > 0.0 {
                Some(ParallelLogs::at(m, x, y)?)
            } else {
                None
            };
            let top = if par.is_some() { k.min(l) } else { 0 };
            let mut terms = Vec::with_capacity(top as usize + 1);
            for n in 0..=top {
                let lp = poisson_triplet_logprob(m, dt, k - n, l - n, n);
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                terms.push(lp + double_derivative_ln(k, l, n, ln_f1, ln_f2, ln_c1, ln_c2, par.as_ref()));
            }
            Ok(log_sum_exp(&terms))
        }
    }
}

/// Sum of the cell log-likelihoods with `dt = T/M`; `−∞` if any observation
/// lies outside the model's support.
pub fn panel_loglik(m: &BcppModel, panel: &IntervalPanel) -> Result<f64> {
    let dt = panel.dt();
    let mut total = 0.0;
    for (z, n) in panel.maxima().iter().zip(panel.counts()) {
        let obs = CellObservation { x: z[0], y: z[1], k: n[0], l: n[1] };
        total += cell_loglik(m, &obs, dt)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JumpSizeDist, LevyCopula, ModelOptions};

    fn clayton(delta: f64, l1: f64, l2: f64) -> BcppModel {
        let e = JumpSizeDist::exponential(1.0).unwrap();
        BcppModel::new(l1, e, l2, e, LevyCopula::clayton(delta).unwrap()).unwrap()
    }

    #[test]
    fn empty_interval_probability() {
        let m = clayton(1.0, 3.0, 5.0);
        let dt = 0.4;
        let v = cell_loglik(&m, &CellObservation::new(0.0, 0.0, 0, 0).unwrap(), dt).unwrap();
        let expected = -(3.0 + 5.0 - m.lambda_parallel()) * dt;
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn poisson_triplet_normalizes() {
        let m = clayton(0.8, 7.0, 9.0);
        let dt = 0.5;
        let mut total = 0.0;
        for a in 0..=30 {
            for b in 0..=30 {
                for c in 0..=30 {
                    total += poisson_triplet_logprob(&m, dt, a, b, c).exp();
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-8, "{total}");
        let s = clayton(0.8, 4.0, 4.0);
        assert_eq!(
            poisson_triplet_logprob(&s, dt, 3, 1, 2),
            poisson_triplet_logprob(&s, dt, 1, 3, 2)
        );
    }

    #[test]
    fn symmetric_model_swaps_margins() {
        let m = clayton(1.3, 6.0, 6.0);
        for &(x, y, k, l) in &[(0.4, 1.2, 3, 1), (2.0, 0.1, 2, 5), (0.7, 0.0, 2, 0)] {
            let a = cell_loglik(&m, &CellObservation::new(x, y, k, l).unwrap(), 0.3).unwrap();
            let b = cell_loglik(&m, &CellObservation::new(y, x, l, k).unwrap(), 0.3).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_common_summand_is_independent_term() {
        let m = clayton(1.0, 2.0, 3.0);
        let (x, y, k, l) = (0.6, 0.9, 3u32, 2u32);
        let ln_f1 = m.density_perp(Margin::First, x).unwrap().ln();
        let ln_f2 = m.density_perp(Margin::Second, y).unwrap().ln();
        let ln_c1 = m.cdf_perp(Margin::First, x).unwrap().ln();
        let ln_c2 = m.cdf_perp(Margin::Second, y).unwrap().ln();
        let par = ParallelLogs::at(&m, x, y).unwrap();
        let got = double_derivative_ln(k, l, 0, ln_f1, ln_f2, ln_c1, ln_c2, Some(&par));
        let expected = (6.0f64).ln() + ln_f1 + ln_f2 + 2.0 * ln_c1 + ln_c2;
        assert!((got - expected).abs() < 1e-13);
    }

    #[test]
    fn near_independence_factorizes() {
        let e = JumpSizeDist::exponential(1.0).unwrap();
        let w = JumpSizeDist::weibull(0.9, 1.4).unwrap();
        let m = BcppModel::with_options(
            4.0,
            e,
            3.0,
            w,
            LevyCopula::clayton(1e-6).unwrap(),
            ModelOptions { degeneracy_floor: 0.0 },
        )
        .unwrap();
        let dt = 0.5;
        for &(x, y, k, l) in &[(0.5, 0.8, 1, 1), (1.7, 0.2, 4, 2), (0.1, 2.2, 2, 3)] {
            let joint = cell_loglik(&m, &CellObservation::new(x, y, k, l).unwrap(), dt).unwrap();
            // univariate compound Poisson maximum cells
            let uni = |d: &JumpSizeDist, lam: f64, z: f64, c: u32| {
                let c = f64::from(c);
                c * (lam * dt).ln() - lam * dt - ln_gamma(c + 1.0)
                    + c.ln()
                    + (c - 1.0) * d.cdf(z).ln()
                    + d.ln_pdf(z)
            };
            let indep = uni(&e, 4.0, x, k) + uni(&w, 3.0, y, l);
            assert!(((joint - indep).exp() - 1.0).abs() < 1e-4, "{joint} vs {indep}");
        }
    }

    #[test]
    fn continuous_in_maxima() {
        let m = clayton(0.695, 71.1 / 12.0, 41.5 / 12.0);
        let base = CellObservation::new(0.8, 1.1, 4, 3).unwrap();
        let v = cell_loglik(&m, &base, 1.0).unwrap();
        for &(dx, dy) in &[(1e-9, 0.0), (0.0, 1e-9), (-1e-9, 1e-9)] {
            let o = CellObservation { x: base.x + dx, y: base.y + dy, ..base };
            assert!((cell_loglik(&m, &o, 1.0).unwrap() - v).abs() < 1e-6);
        }
    }

    #[test]
    fn panel_sum_and_permutation_invariance() {
        use crate::simulate::{aggregate, sample_path};
        let m = clayton(1.0, 40.0, 40.0);
        let panel = aggregate(&sample_path(&m, 1.0, 9).unwrap(), 1.0, 10).unwrap();
        let total = panel_loglik(&m, &panel).unwrap();
        let mut z = panel.maxima().to_vec();
        let mut n = panel.counts().to_vec();
        z.reverse();
        n.reverse();
        z.swap(0, 3);
        n.swap(0, 3);
        let shuffled = IntervalPanel::new(1.0, z, n).unwrap();
        assert!((panel_loglik(&m, &shuffled).unwrap() - total).abs() < 1e-9 * total.abs());
        let single = IntervalPanel::new(0.1, panel.maxima()[..1].to_vec(), panel.counts()[..1].to_vec())
            .unwrap();
        let r = panel.maxima()[0];
        let c = panel.counts()[0];
        let cell = cell_loglik(&m, &CellObservation::new(r[0], r[1], c[0], c[1]).unwrap(), 0.1).unwrap();
        assert_eq!(panel_loglik(&m, &single).unwrap(), cell);
    }
}
