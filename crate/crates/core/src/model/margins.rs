//! Parametric jump-size laws for the marginal processes.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Family of a marginal jump-size distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistFamily {
    Exponential,
    Weibull,
}

impl DistFamily {
    /// Number of free parameters of the family.
    pub fn n_params(self) -> usize {
        match self {
            DistFamily::Exponential => 1,
            DistFamily::Weibull => 2,
        }
    }

    /// Parameter names, suffixed with the margin number (`theta1`, `alpha2`, ...).
    pub fn param_names(self, margin: usize) -> Vec<String> {
        match self {
            DistFamily::Exponential => vec![format!("theta{margin}")],
            DistFamily::Weibull => vec![format!("alpha{margin}"), format!("beta{margin}")],
        }
    }
}

impl fmt::Display for DistFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistFamily::Exponential => "exponential",
            DistFamily::Weibull => "weibull",
        })
    }
}

impl FromStr for DistFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(DistFamily::Exponential),
            "weibull" => Ok(DistFamily::Weibull),
            other => Err(Error::InvalidParameter(format!(
                "unknown jump-size family '{other}' (expected exponential or weibull)"
            ))),
        }
    }
}

/// Jump-size distribution on `[0, ∞)`.
///
/// `Exponential { theta }` has rate `theta`; `Weibull { alpha, beta }` has
/// scale `alpha` and shape `beta`, i.e. `F(x) = 1 - exp(-(x/alpha)^beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpSizeDist {
    Exponential { theta: f64 },
    Weibull { alpha: f64, beta: f64 },
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}

impl JumpSizeDist {
    pub fn exponential(theta: f64) -> Result<Self> {
        check_positive("theta", theta)?;
        Ok(JumpSizeDist::Exponential { theta })
    }

    pub fn weibull(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(JumpSizeDist::Weibull { alpha, beta })
    }

    /// Builds a distribution from its family and parameter slice (in
    /// [`JumpSizeDist::params`] order).
    pub fn from_params(family: DistFamily, params: &[f64]) -> Result<Self> {
        if params.len() != family.n_params() {
            return Err(Error::InvalidParameter(format!(
                "{family} takes {} parameter(s), got {}",
                family.n_params(),
                params.len()
            )));
        }
        match family {
            DistFamily::Exponential => Self::exponential(params[0]),
            DistFamily::Weibull => Self::weibull(params[0], params[1]),
        }
    }

    pub fn family(&self) -> DistFamily {
        match self {
            JumpSizeDist::Exponential { .. } => DistFamily::Exponential,
            JumpSizeDist::Weibull { .. } => DistFamily::Weibull,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            JumpSizeDist::Exponential { theta } => vec![theta],
            JumpSizeDist::Weibull { alpha, beta } => vec![alpha, beta],
        }
    }

    /// `-ln F̄(x)`, the cumulative hazard.
    fn hazard(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            JumpSizeDist::Exponential { theta } => theta * x,
            JumpSizeDist::Weibull { alpha, beta } => (x / alpha).powf(beta),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        -(-self.hazard(x)).exp_m1()
    }

    pub fn survival(&self, x: f64) -> f64 {
        (-self.hazard(x)).exp()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.ln_pdf(x).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 || x.is_infinite() {
            return f64::NEG_INFINITY;
        }
        match *self {
            JumpSizeDist::Exponential { theta } => theta.ln() - theta * x,
            JumpSizeDist::Weibull { alpha, beta } => {
                if x == 0.0 {
                    return match beta {
                        b if b < 1.0 => f64::INFINITY,
                        b if b == 1.0 => -alpha.ln(),
                        _ => f64::NEG_INFINITY,
                    };
                }
                let z = x / alpha;
                beta.ln() - alpha.ln() + (beta - 1.0) * z.ln() - z.powf(beta)
            }
        }
    }

    /// Inverse of the distribution function, closed form for both families.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("quantile level {p} outside [0, 1]")));
        }
        Ok(self.inverse_hazard(-(-p).ln_1p()))
    }

    /// Returns `x` with `F̄(x) = s`. More accurate than `quantile(1 - s)` in the
    /// upper tail.
    pub fn quantile_survival(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("survival level {s} outside [0, 1]")));
        }
        Ok(self.inverse_hazard(-s.ln()))
    }

    fn inverse_hazard(&self, h: f64) -> f64 {
        match *self {
            JumpSizeDist::Exponential { theta } => h / theta,
            JumpSizeDist::Weibull { alpha, beta } => alpha * h.powf(1.0 / beta),
        }
    }
}

impl fmt::Display for JumpSizeDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            JumpSizeDist::Exponential { theta } => write!(f, "Exponential(theta={theta})"),
            JumpSizeDist::Weibull { alpha, beta } => {
                write!(f, "Weibull(alpha={alpha}, beta={beta})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dists() -> Vec<JumpSizeDist> {
        vec![
            JumpSizeDist::exponential(1.0).unwrap(),
            JumpSizeDist::exponential(3.5).unwrap(),
            JumpSizeDist::weibull(0.818, 1.197).unwrap(),
            JumpSizeDist::weibull(1.036, 1.131).unwrap(),
            JumpSizeDist::weibull(2.0, 0.7).unwrap(),
        ]
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(JumpSizeDist::exponential(0.0).is_err());
        assert!(JumpSizeDist::exponential(f64::NAN).is_err());
        assert!(JumpSizeDist::weibull(1.0, -2.0).is_err());
        assert!(JumpSizeDist::from_params(DistFamily::Weibull, &[1.0]).is_err());
    }

    #[test]
    fn cdf_boundaries() {
        for d in dists() {
            assert_eq!(d.cdf(0.0), 0.0);
            assert_eq!(d.survival(0.0), 1.0);
            assert_eq!(d.cdf(f64::INFINITY), 1.0);
            assert!(d.cdf(1e3) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn pdf_integrates_to_one() {
        for d in dists() {
            // trapezoid on a log grid, x = e^t, so the Weibull(β<1) pole stays resolved
            let (lo, hi) = (d.quantile(1e-12).unwrap().ln(), d.quantile_survival(1e-12).unwrap().ln());
            let n = 200_000;
            let h = (hi - lo) / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let x = (lo + i as f64 * h).exp();
                total += w * d.pdf(x) * x;
            }
            total *= h;
            assert!((total - 1.0).abs() < 1e-8, "{d}: {total}");
        }
    }

    #[test]
    fn quantiles_closed_form() {
        let d = JumpSizeDist::exponential(2.0).unwrap();
        assert!((d.quantile(0.5).unwrap() - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        let w = JumpSizeDist::weibull(2.0, 3.0).unwrap();
        let expected = 2.0 * std::f64::consts::LN_2.powf(1.0 / 3.0);
        assert!((w.quantile(0.5).unwrap() - expected).abs() < 1e-14);
        assert!(w.quantile(1.5).is_err());
        assert_eq!(w.quantile(1.0).unwrap(), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn survival_complements_cdf(x in 0.0f64..50.0, idx in 0usize..5) {
            let d = dists()[idx];
            prop_assert!((d.survival(x) - (1.0 - d.cdf(x))).abs() < 1e-15);
        }

        #[test]
        fn quantile_inverts_cdf(x in 1e-3f64..8.0, idx in 0usize..5) {
            let d = dists()[idx];
            if d.survival(x) > 1e-3 {
                let back = d.quantile(d.cdf(x)).unwrap();
                prop_assert!((back - x).abs() <= 1e-9 * x.max(1.0));
            }
            let back_s = d.quantile_survival(d.survival(x)).unwrap();
            prop_assert!((back_s - x).abs() <= 1e-9 * x.max(1.0));
        }

        #[test]
        fn cdf_nondecreasing(a in 0.0f64..20.0, b in 0.0f64..20.0, idx in 0usize..5) {
            let d = dists()[idx];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.cdf(lo) <= d.cdf(hi));
        }
    }
}
