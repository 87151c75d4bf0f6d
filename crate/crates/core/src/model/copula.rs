//! Positive Lévy copulas: Clayton and pure common shock.
//!
//! Arguments are tail masses (expected jumps per unit time) in `[0, ∞]`.
//! The Clayton family is evaluated through `softplus(δ ln(u/v))`, which keeps
//! every quantity finite for `δ` in `[1e-3, 1e3]` and extreme mass ratios.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Copula family without its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CopulaFamily {
    Clayton,
    PureCommonShock,
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::PureCommonShock => "pure-common-shock",
        })
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "clayton" => Ok(CopulaFamily::Clayton),
            "pure-common-shock" | "pcs" | "common-shock" => Ok(CopulaFamily::PureCommonShock),
            other => Err(Error::InvalidParameter(format!(
                "unknown copula family '{other}' (expected clayton or pure-common-shock)"
            ))),
        }
    }
}

/// A two-dimensional positive Lévy copula.
///
/// `PureCommonShock` additionally requires `delta <= min(1/λ₁, 1/λ₂)`; that bound
/// depends on the margins and is checked when a [`crate::BcppModel`] is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyCopula {
    Clayton { delta: f64 },
    PureCommonShock { delta: f64 },
}

/// `ln(1 + e^r)` without overflow; `±∞` map to `∞` and `0`.
pub(crate) fn softplus(r: f64) -> f64 {
    if r > 0.0 {
        r + (-r).exp().ln_1p()
    } else {
        r.exp().ln_1p()
    }
}

fn check_mass(name: &str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::Domain(format!("{name} must be a mass in [0, ∞], got {x}")))
    } else {
        Ok(())
    }
}

impl LevyCopula {
    pub fn clayton(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Clayton delta must be finite and > 0, got {delta}"
            )));
        }
        Ok(LevyCopula::Clayton { delta })
    }

    pub fn pure_common_shock(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pure common shock delta must be finite and >= 0, got {delta}"
            )));
        }
        Ok(LevyCopula::PureCommonShock { delta })
    }

    pub fn new(family: CopulaFamily, delta: f64) -> Result<Self> {
        match family {
            CopulaFamily::Clayton => Self::clayton(delta),
            CopulaFamily::PureCommonShock => Self::pure_common_shock(delta),
        }
    }

    pub fn family(&self) -> CopulaFamily {
        match self {
            LevyCopula::Clayton { .. } => CopulaFamily::Clayton,
            LevyCopula::PureCommonShock { .. } => CopulaFamily::PureCommonShock,
        }
    }

    pub fn delta(&self) -> f64 {
        match *self {
            LevyCopula::Clayton { delta } | LevyCopula::PureCommonShock { delta } => delta,
        }
    }

    /// `𝒞(u, v)`. Infinite arguments follow the uniform-margin rule.
    pub fn value(&self, u: f64, v: f64) -> Result<f64> {
        check_mass("u", u)?;
        check_mass("v", v)?;
        Ok(self.value_unchecked(u, v))
    }

    /// `∂𝒞/∂u` on the open quadrant.
    pub fn du(&self, u: f64, v: f64) -> Result<f64> {
        self.check_interior(u, v)?;
        Ok(self.du_unchecked(u, v))
    }

    /// `∂𝒞/∂v` on the open quadrant.
    pub fn dv(&self, u: f64, v: f64) -> Result<f64> {
        self.check_interior(u, v)?;
        Ok(self.dv_unchecked(u, v))
    }

    /// `∂²𝒞/∂u∂v` on the open quadrant.
    pub fn dudv(&self, u: f64, v: f64) -> Result<f64> {
        self.check_interior(u, v)?;
        Ok(self.dudv_unchecked(u, v))
    }

    /// `u − 𝒞(u, v)` without cancellation.
    pub fn complement_first(&self, u: f64, v: f64) -> Result<f64> {
        check_mass("u", u)?;
        check_mass("v", v)?;
        Ok(self.excess_first(u, v))
    }

    /// `v − 𝒞(u, v)` without cancellation.
    pub fn complement_second(&self, u: f64, v: f64) -> Result<f64> {
        check_mass("u", u)?;
        check_mass("v", v)?;
        Ok(self.excess_second(u, v))
    }

    /// `1 − ∂𝒞/∂u` without cancellation.
    pub fn du_complement(&self, u: f64, v: f64) -> Result<f64> {
        self.check_interior(u, v)?;
        Ok(self.one_minus_du(u, v))
    }

    /// `1 − ∂𝒞/∂v` without cancellation.
    pub fn dv_complement(&self, u: f64, v: f64) -> Result<f64> {
        self.check_interior(u, v)?;
        Ok(self.one_minus_dv(u, v))
    }

    fn check_interior(&self, u: f64, v: f64) -> Result<()> {
        check_mass("u", u)?;
        check_mass("v", v)?;
        if u.is_infinite() || v.is_infinite() {
            return Err(Error::Domain(format!(
                "copula derivatives need finite arguments, got ({u}, {v})"
            )));
        }
        if matches!(self, LevyCopula::Clayton { .. }) && (u == 0.0 || v == 0.0) {
            return Err(Error::Domain(format!(
                "Clayton derivatives are singular on the boundary, got ({u}, {v})"
            )));
        }
        Ok(())
    }

    pub(crate) fn value_unchecked(&self, u: f64, v: f64) -> f64 {
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        if u.is_infinite() {
            return v;
        }
        if v.is_infinite() {
            return u;
        }
        match *self {
            LevyCopula::Clayton { delta } => {
                let r = delta * (u.ln() - v.ln());
                u * (-softplus(r) / delta).exp()
            }
            LevyCopula::PureCommonShock { delta } => delta * u * v,
        }
    }

    /// `u - 𝒞(u, v)`, evaluated without cancellation.
    pub(crate) fn excess_first(&self, u: f64, v: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        if v.is_infinite() {
            return 0.0;
        }
        match *self {
            LevyCopula::Clayton { delta } => {
                let r = delta * (u.ln() - v.ln());
                -u * (-softplus(r) / delta).exp_m1()
            }
            LevyCopula::PureCommonShock { delta } => u * (1.0 - delta * v),
        }
    }

    /// `v - 𝒞(u, v)`.
    pub(crate) fn excess_second(&self, u: f64, v: f64) -> f64 {
        self.swapped().excess_first(v, u)
    }

    pub(crate) fn du_unchecked(&self, u: f64, v: f64) -> f64 {
        if v.is_infinite() {
            return 1.0;
        }
        match *self {
            LevyCopula::Clayton { delta } => {
                if v == 0.0 {
                    return 0.0;
                }
                let r = delta * (u.ln() - v.ln());
                (-(1.0 + delta) / delta * softplus(r)).exp()
            }
            LevyCopula::PureCommonShock { delta } => delta * v,
        }
    }

    pub(crate) fn dv_unchecked(&self, u: f64, v: f64) -> f64 {
        self.swapped().du_unchecked(v, u)
    }

    /// `1 - ∂𝒞/∂u`, evaluated without cancellation.
    pub(crate) fn one_minus_du(&self, u: f64, v: f64) -> f64 {
        if v.is_infinite() {
            return 0.0;
        }
        match *self {
            LevyCopula::Clayton { delta } => {
                if v == 0.0 {
                    return 1.0;
                }
                let r = delta * (u.ln() - v.ln());
                -(-(1.0 + delta) / delta * softplus(r)).exp_m1()
            }
            LevyCopula::PureCommonShock { delta } => 1.0 - delta * v,
        }
    }

    pub(crate) fn one_minus_dv(&self, u: f64, v: f64) -> f64 {
        self.swapped().one_minus_du(v, u)
    }

    pub(crate) fn dudv_unchecked(&self, u: f64, v: f64) -> f64 {
        if u.is_infinite() || v.is_infinite() {
            return 0.0;
        }
        match *self {
            LevyCopula::Clayton { delta } => {
                // written around the smaller argument so that softplus(·) stays O(1)
                let (small, large) = if u <= v { (u, v) } else { (v, u) };
                if small == 0.0 {
                    return 0.0;
                }
                let r = delta * (small.ln() - large.ln());
                ((1.0 + delta).ln() + delta * small.ln()
                    - (1.0 + delta) * large.ln()
                    - (1.0 / delta + 2.0) * softplus(r))
                .exp()
            }
            LevyCopula::PureCommonShock { delta } => delta,
        }
    }

    /// Solves `𝒞(u, v) = target` for `u` with `v` fixed. Returns `∞` when
    /// `target >= v` (the margin bound).
    pub(crate) fn inverse_first(&self, target: f64, v: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        if target >= v {
            return f64::INFINITY;
        }
        match *self {
            LevyCopula::Clayton { delta } => {
                if v.is_infinite() {
                    return target;
                }
                let gap = -(delta * (target.ln() - v.ln())).exp_m1();
                target * (-gap.ln() / delta).exp()
            }
            LevyCopula::PureCommonShock { delta } => {
                if v.is_infinite() {
                    target
                } else {
                    target / (delta * v)
                }
            }
        }
    }

    /// Both families are symmetric, so swapping arguments is the identity.
    fn swapped(&self) -> Self {
        *self
    }
}

impl fmt::Display for LevyCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(delta={})", self.family(), self.delta())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    /// Direct transcription of the Clayton formula; only valid where nothing
    /// overflows. Used as the reference for the log-domain implementation.
    fn clayton_naive(delta: f64, u: f64, v: f64) -> f64 {
        (u.powf(-delta) + v.powf(-delta)).powf(-1.0 / delta)
    }

    #[test]
    fn clayton_hand_values() {
        let c = LevyCopula::clayton(1.0).unwrap();
        assert!((c.value(1000.0, 1000.0).unwrap() - 500.0).abs() < 1e-10);
        assert!((c.du(1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        // (1+δ)(u^-δ+v^-δ)^(-1/δ-2)(uv)^(-δ-1) at δ=1, (1,1) = 2 * 2^-3
        assert!((c.dudv(1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn clayton_matches_naive_formula() {
        for &delta in &[0.05, 0.5, 1.0, 2.0, 5.0] {
            let c = LevyCopula::clayton(delta).unwrap();
            for &(u, v) in &[(0.3, 2.0), (10.0, 10.0), (700.0, 3.0), (1.0, 1000.0)] {
                let want = clayton_naive(delta, u, v);
                let got = c.value(u, v).unwrap();
                assert!((got - want).abs() <= 1e-12 * want, "δ={delta} ({u},{v})");
            }
        }
    }

    #[test]
    fn uniform_margins_and_grounding() {
        for c in [
            LevyCopula::clayton(0.7).unwrap(),
            LevyCopula::clayton(300.0).unwrap(),
            LevyCopula::pure_common_shock(0.01).unwrap(),
        ] {
            for &u in &[0.0, 1e-8, 0.3, 42.0, 1e6] {
                assert_eq!(c.value(u, INF).unwrap(), u);
                assert_eq!(c.value(INF, u).unwrap(), u);
                assert_eq!(c.value(u, 0.0).unwrap(), 0.0);
                assert_eq!(c.value(0.0, u).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn pure_common_shock_extreme_delta() {
        // δ = min(1/λ₁, 1/λ₂) with λ₁=2, λ₂=5 gives λ∥ = min(λ₁, λ₂)
        let c = LevyCopula::pure_common_shock(0.2).unwrap();
        assert!((c.value(2.0, 5.0).unwrap() - 2.0).abs() < 1e-15);
        let c = LevyCopula::pure_common_shock(0.001).unwrap();
        assert_eq!(c.dudv(10.0, 20.0).unwrap(), 0.001);
        assert_eq!(c.du(10.0, 20.0).unwrap(), 0.02);
    }

    #[test]
    fn large_delta_approaches_comonotonic() {
        let c = LevyCopula::clayton(100.0).unwrap();
        let val = c.value(1.0, 2.0).unwrap();
        assert!((val - 1.0).abs() < 0.01, "{val}");
        let c = LevyCopula::clayton(1000.0).unwrap();
        assert!((c.value(1000.0, 1000.0).unwrap() - 1000.0 * 0.5f64.powf(1e-3)).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        let c = LevyCopula::clayton(1.0).unwrap();
        assert!(matches!(c.value(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(c.value(1.0, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(c.du(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(c.dudv(1.0, 0.0), Err(Error::Domain(_))));
        assert!(LevyCopula::clayton(0.0).is_err());
        assert!(LevyCopula::pure_common_shock(-0.1).is_err());
        assert!(LevyCopula::pure_common_shock(0.0).is_ok());
        let p = LevyCopula::pure_common_shock(0.1).unwrap();
        assert!(p.du(0.0, 1.0).is_ok());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &delta in &[0.1, 0.695, 1.0, 5.0, 30.0] {
            let c = LevyCopula::clayton(delta).unwrap();
            for i in 0..12 {
                for j in 0..12 {
                    let u = 10f64.powf(-2.0 + 0.4 * i as f64);
                    let v = 10f64.powf(-2.0 + 0.4 * j as f64);
                    let hu = 1e-5 * u;
                    let hv = 1e-5 * v;
                    let fd_u = (clayton_naive(delta, u + hu, v) - clayton_naive(delta, u - hu, v))
                        / (2.0 * hu);
                    let du = c.du(u, v).unwrap();
                    let cv = c.value(u, v).unwrap();
                    // differences of 𝒞 only resolve derivatives that are not tiny next to 𝒞/u
                    if du * u > 1e-3 * cv {
                        assert!((du - fd_u).abs() <= 1e-6 * du.abs() + 1e-300, "δ={delta} ({u},{v}) {du} vs {fd_u}");
                    }
                    let fd_v = (c.value(u, v + hv).unwrap() - c.value(u, v - hv).unwrap()) / (2.0 * hv);
                    let dv = c.dv(u, v).unwrap();
                    assert!((dv - c.du(v, u).unwrap()).abs() <= 1e-15 * dv);
                    if dv * v > 1e-3 * cv {
                        assert!((dv - fd_v).abs() <= 1e-6 * dv, "δ={delta} ({u},{v})");
                    }
                    // difference whichever of ∂u𝒞 and 1 − ∂u𝒞 is small, to avoid cancellation
                    let fd_uv = if c.du_unchecked(u, v) < 0.5 {
                        (c.du_unchecked(u, v + hv) - c.du_unchecked(u, v - hv)) / (2.0 * hv)
                    } else {
                        (c.one_minus_du(u, v - hv) - c.one_minus_du(u, v + hv)) / (2.0 * hv)
                    };
                    let duv = c.dudv(u, v).unwrap();
                    if duv > 1e-200 {
                        assert!((duv - fd_uv).abs() <= 1e-5 * duv, "δ={delta} ({u},{v}) {duv} vs {fd_uv}");
                    }
                }
            }
        }
    }

    #[test]
    fn stable_complements() {
        let c = LevyCopula::clayton(2.0).unwrap();
        for &(u, v) in &[(1e-6, 1000.0), (5.0, 7.0), (900.0, 3.0)] {
            let a = c.excess_first(u, v);
            let b = u - c.value_unchecked(u, v);
            assert!((a - b).abs() <= 1e-12 * u, "({u},{v})");
            let d = c.one_minus_du(u, v);
            assert!((d - (1.0 - c.du_unchecked(u, v))).abs() < 1e-14);
        }
        // deep in the tail the naive difference cancels to 0 while the stable one does not
        let tiny = c.excess_first(1e-9, 1000.0);
        assert!(tiny > 0.0 && (tiny - 1e-9 * 0.5 * (1e-12f64).powi(2)).abs() < 1e-40);
    }

    #[test]
    fn boundary_limits_of_derivatives() {
        let c = LevyCopula::clayton(1.3).unwrap();
        assert_eq!(c.du_unchecked(2.0, 0.0), 0.0);
        assert_eq!(c.du_unchecked(2.0, INF), 1.0);
        assert_eq!(c.dudv_unchecked(2.0, 0.0), 0.0);
        assert_eq!(c.dudv_unchecked(0.0, 2.0), 0.0);
        assert_eq!(c.dudv_unchecked(2.0, INF), 0.0);
    }

    #[test]
    fn inverse_first_roundtrip() {
        for c in [
            LevyCopula::clayton(0.3).unwrap(),
            LevyCopula::clayton(8.0).unwrap(),
            LevyCopula::pure_common_shock(0.001).unwrap(),
        ] {
            for &u in &[1e-4, 0.5, 3.0, 250.0] {
                let v = 400.0;
                let target = c.value(u, v).unwrap();
                let back = c.inverse_first(target, v);
                assert!((back - u).abs() <= 1e-9 * u, "{c} u={u} back={back}");
            }
        }
    }

    fn copula_strategy() -> impl Strategy<Value = LevyCopula> {
        prop_oneof![
            (1e-3f64..50.0).prop_map(|d| LevyCopula::clayton(d).unwrap()),
            (0.0f64..0.01).prop_map(|d| LevyCopula::pure_common_shock(d).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn two_increasing(
            c in copula_strategy(),
            a in 0.0f64..100.0, b in 0.0f64..100.0,
            x in 0.0f64..100.0, y in 0.0f64..100.0,
        ) {
            let (v1, u1) = if a <= b { (a, b) } else { (b, a) };
            let (v2, u2) = if x <= y { (x, y) } else { (y, x) };
            let vol = c.value(u1, u2).unwrap() - c.value(u1, v2).unwrap()
                - c.value(v1, u2).unwrap() + c.value(v1, v2).unwrap();
            prop_assert!(vol >= -1e-9 * (u1 + u2));
        }

        #[test]
        fn bounded_by_margins(c in copula_strategy(), u in 0.0f64..100.0, v in 0.0f64..100.0) {
            let val = c.value(u, v).unwrap();
            prop_assert!(val >= 0.0);
            // the pure common shock bound needs δ ≤ 1/max(u, v); 0.01 ≤ 1/100 holds here
            prop_assert!(val <= u.min(v) * (1.0 + 1e-12));
        }

        #[test]
        fn derivatives_are_nonnegative(c in copula_strategy(), u in 1e-3f64..100.0, v in 1e-3f64..100.0) {
            prop_assert!(c.du(u, v).unwrap() >= 0.0);
            prop_assert!(c.dv(u, v).unwrap() >= 0.0);
            prop_assert!(c.dudv(u, v).unwrap() >= 0.0);
            prop_assert!(c.du(u, v).unwrap().is_finite());
        }
    }
}
