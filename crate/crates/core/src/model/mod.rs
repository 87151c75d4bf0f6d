//! Marginal laws, Lévy copulas, and every quantity the copula implies for the
//! common-shock decomposition `S = S⊥ + S∥`.
//!
//! A [`BcppModel`] is built from two `(λ_j, F_j)` pairs and a [`LevyCopula`].
//! From these it derives the frequencies `λ∥ = 𝒞(λ₁, λ₂)` and
//! `λ_j⊥ = λ_j − λ∥`, the jump-size laws `F₁⊥`, `F₂⊥` of the independent parts,
//! and the bivariate law `F∥` of the common shocks together with its partial
//! derivatives.

mod copula;
mod margins;

pub use copula::{CopulaFamily, LevyCopula};
pub use margins::{DistFamily, JumpSizeDist};

use crate::error::{Error, Result};

/// Which of the two marginal processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Margin {
    First,
    Second,
}

impl Margin {
    pub fn index(self) -> usize {
        match self {
            Margin::First => 1,
            Margin::Second => 2,
        }
    }
}

/// Knobs used when validating a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    /// A subprocess frequency below `floor * λ_j` counts as zero.
    ///
    /// With a floor of exactly 0 a model with `λ∥ = 0` is accepted; the
    /// likelihood then drops every common-shock term, while operations on `F∥`
    /// still fail.
    pub degeneracy_floor: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            degeneracy_floor: 1e-12,
        }
    }
}

/// Roundoff allowance for probabilities before a result counts as a bug.
const PROBABILITY_SLACK: f64 = 1e-12;

pub(crate) fn clamp_probability(p: f64, what: &str) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else if p > -PROBABILITY_SLACK && p < 1.0 + PROBABILITY_SLACK {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::Consistency(format!("{what} evaluated to {p}")))
    }
}

/// Partial derivatives of `F∥` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelPartials {
    /// `∂F∥/∂x`
    pub d1: f64,
    /// `∂F∥/∂y`
    pub d2: f64,
    /// `∂²F∥/∂x∂y`
    pub density: f64,
}

/// Bivariate compound Poisson process with positive jumps, parameterized by
/// its margins and a Lévy copula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcppModel {
    lambda1: f64,
    lambda2: f64,
    dist1: JumpSizeDist,
    dist2: JumpSizeDist,
    copula: LevyCopula,
    lambda_parallel: f64,
    lambda_perp1: f64,
    lambda_perp2: f64,
}

impl BcppModel {
    pub fn new(
        lambda1: f64,
        dist1: JumpSizeDist,
        lambda2: f64,
        dist2: JumpSizeDist,
        copula: LevyCopula,
    ) -> Result<Self> {
        Self::with_options(lambda1, dist1, lambda2, dist2, copula, ModelOptions::default())
    }

    pub fn with_options(
        lambda1: f64,
        dist1: JumpSizeDist,
        lambda2: f64,
        dist2: JumpSizeDist,
        copula: LevyCopula,
        options: ModelOptions,
    ) -> Result<Self> {
        for (name, lambda) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {lambda}"
                )));
            }
        }
        if let LevyCopula::PureCommonShock { delta } = copula {
            let bound = (1.0 / lambda1).min(1.0 / lambda2);
            if delta > bound * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "pure common shock delta {delta} exceeds min(1/lambda1, 1/lambda2) = {bound}"
                )));
            }
        }
        let lambda_parallel = copula.value_unchecked(lambda1, lambda2);
        let lambda_perp1 = copula.excess_first(lambda1, lambda2).max(0.0);
        let lambda_perp2 = copula.excess_second(lambda1, lambda2).max(0.0);

        let floor = options.degeneracy_floor;
        if lambda_perp1 <= floor * lambda1 || lambda_perp2 <= floor * lambda2 {
            return Err(Error::Degenerate("independent part has zero frequency"));
        }
        if floor > 0.0 && lambda_parallel <= floor * lambda1.min(lambda2) {
            return Err(Error::Degenerate("dependent part has zero frequency"));
        }
        Ok(Self {
            lambda1,
            lambda2,
            dist1,
            dist2,
            copula,
            lambda_parallel,
            lambda_perp1,
            lambda_perp2,
        })
    }

    pub fn lambda(&self, j: Margin) -> f64 {
        match j {
            Margin::First => self.lambda1,
            Margin::Second => self.lambda2,
        }
    }

    pub fn dist(&self, j: Margin) -> &JumpSizeDist {
        match j {
            Margin::First => &self.dist1,
            Margin::Second => &self.dist2,
        }
    }

    pub fn copula(&self) -> &LevyCopula {
        &self.copula
    }

    /// Replaces the copula, keeping the margins.
    pub fn with_copula(&self, copula: LevyCopula) -> Result<Self> {
        Self::new(self.lambda1, self.dist1, self.lambda2, self.dist2, copula)
    }

    /// `λ∥ = 𝒞(λ₁, λ₂)`, the common-shock frequency.
    pub fn lambda_parallel(&self) -> f64 {
        self.lambda_parallel
    }

    /// `λ_j⊥ = λ_j − λ∥`.
    pub fn lambda_perp(&self, j: Margin) -> f64 {
        match j {
            Margin::First => self.lambda_perp1,
            Margin::Second => self.lambda_perp2,
        }
    }

    /// Marginal tail integral `U_j(x) = λ_j F̄_j(x)`.
    pub fn marginal_tail(&self, j: Margin, x: f64) -> f64 {
        self.lambda(j) * self.dist(j).survival(x)
    }

    /// Tail integral `U(x, y) = 𝒞(U₁(x), U₂(y))` of jumps exceeding `(x, y)`
    /// componentwise; `U(0, 0) = λ∥`.
    pub fn tail_integral(&self, x: f64, y: f64) -> Result<f64> {
        self.copula
            .value(self.marginal_tail(Margin::First, x), self.marginal_tail(Margin::Second, y))
    }

    /// `ν₁⊥((x, ∞)) = ν₁((x, ∞)) − 𝒞(ν₁((x, ∞)), λ₂)`.
    pub fn nu1_perp_tail(&self, x: f64) -> f64 {
        let u = self.marginal_tail(Margin::First, x);
        self.copula.excess_first(u, self.lambda2)
    }

    /// `ν₂⊥((y, ∞)) = ν₂((y, ∞)) − 𝒞(λ₁, ν₂((y, ∞)))`.
    pub fn nu2_perp_tail(&self, y: f64) -> f64 {
        let v = self.marginal_tail(Margin::Second, y);
        self.copula.excess_second(self.lambda1, v)
    }

    /// `ν∥((x, ∞) × (y, ∞)) = 𝒞(ν₁((x, ∞)), ν₂((y, ∞)))`.
    pub fn nu_parallel_tail(&self, x: f64, y: f64) -> f64 {
        self.copula.value_unchecked(
            self.marginal_tail(Margin::First, x),
            self.marginal_tail(Margin::Second, y),
        )
    }

    fn require_perp(&self, j: Margin) -> Result<f64> {
        let lp = self.lambda_perp(j);
        if lp > 0.0 {
            Ok(lp)
        } else {
            Err(Error::Degenerate("independent part has zero frequency"))
        }
    }

    fn require_parallel(&self) -> Result<f64> {
        if self.lambda_parallel > 0.0 {
            Ok(self.lambda_parallel)
        } else {
            Err(Error::Degenerate("dependent part has zero frequency"))
        }
    }

    fn check_size(x: f64) -> Result<()> {
        if x.is_nan() || x < 0.0 {
            Err(Error::Domain(format!("jump size must be >= 0, got {x}")))
        } else {
            Ok(())
        }
    }

    /// `F̄_j⊥(x)`, survival function of the independent-part jump sizes.
    pub fn survival_perp(&self, j: Margin, x: f64) -> Result<f64> {
        Self::check_size(x)?;
        let lp = self.require_perp(j)?;
        let excess = match j {
            Margin::First => self.nu1_perp_tail(x),
            Margin::Second => self.nu2_perp_tail(x),
        };
        clamp_probability(excess / lp, "independent-part survival")
    }

    pub fn cdf_perp(&self, j: Margin, x: f64) -> Result<f64> {
        Ok(1.0 - self.survival_perp(j, x)?)
    }

    /// `f_j⊥(x) = λ_j f_j(x) / λ_j⊥ · [1 − ∂𝒞/∂u_j]`.
    pub fn density_perp(&self, j: Margin, x: f64) -> Result<f64> {
        Self::check_size(x)?;
        let lp = self.require_perp(j)?;
        let f = self.dist(j).pdf(x);
        if f == 0.0 {
            return Ok(0.0);
        }
        let t = self.marginal_tail(j, x);
        let gap = match j {
            Margin::First => self.copula.one_minus_du(t, self.lambda2),
            Margin::Second => self.copula.one_minus_dv(self.lambda1, t),
        };
        Ok(self.lambda(j) * f / lp * gap)
    }

    /// `F̄∥(x, y) = 𝒞(λ₁F̄₁(x), λ₂F̄₂(y)) / λ∥`. Infinite sizes are allowed.
    pub fn survival_parallel(&self, x: f64, y: f64) -> Result<f64> {
        Self::check_size(x)?;
        Self::check_size(y)?;
        let lp = self.require_parallel()?;
        clamp_probability(self.nu_parallel_tail(x, y) / lp, "common-shock survival")
    }

    /// `F∥(x, y) = 1 − F̄∥(x, 0) − F̄∥(0, y) + F̄∥(x, y)`.
    pub fn cdf_parallel(&self, x: f64, y: f64) -> Result<f64> {
        Self::check_size(x)?;
        Self::check_size(y)?;
        let lp = self.require_parallel()?;
        let u = self.marginal_tail(Margin::First, x);
        let v = self.marginal_tail(Margin::Second, y);
        let c = &self.copula;
        // (λ∥ − 𝒞(u, λ₂)) − (𝒞(λ₁, v) − 𝒞(u, v)): both brackets are rectangle
        // masses, so each is nonnegative up to roundoff
        let first = self.lambda_parallel - c.value_unchecked(u, self.lambda2);
        let second = c.value_unchecked(self.lambda1, v) - c.value_unchecked(u, v);
        clamp_probability((first - second) / lp, "common-shock distribution function")
    }

    /// `(F₁∥(x, y), F₂∥(x, y), f∥(x, y))`: the first partials and the mixed
    /// second partial of `F∥`.
    ///
    /// `y = ∞` (resp. `x = ∞`) is accepted and yields the one-argument marginal
    /// density in the first (resp. second) slot.
    pub fn parallel_partials(&self, x: f64, y: f64) -> Result<ParallelPartials> {
        Self::check_size(x)?;
        Self::check_size(y)?;
        let lp = self.require_parallel()?;
        let c = &self.copula;
        let u = self.marginal_tail(Margin::First, x);
        let v = self.marginal_tail(Margin::Second, y);
        let f1 = self.dist1.pdf(x);
        let f2 = self.dist2.pdf(y);

        let d1 = if f1 == 0.0 {
            0.0
        } else {
            let diff = c.du_unchecked(u, self.lambda2) - c.du_unchecked(u, v);
            self.lambda1 * f1 / lp * diff.max(0.0)
        };
        let d2 = if f2 == 0.0 {
            0.0
        } else {
            let diff = c.dv_unchecked(self.lambda1, v) - c.dv_unchecked(u, v);
            self.lambda2 * f2 / lp * diff.max(0.0)
        };
        let density = if f1 == 0.0 || f2 == 0.0 {
            0.0
        } else {
            self.lambda1 * self.lambda2 * f1 * f2 / lp * c.dudv_unchecked(u, v)
        };
        Ok(ParallelPartials { d1, d2, density })
    }

    /// One-argument marginal `F_j∥(x)` of the common-shock jump sizes.
    pub fn parallel_marginal_cdf(&self, j: Margin, x: f64) -> Result<f64> {
        match j {
            Margin::First => self.cdf_parallel(x, f64::INFINITY),
            Margin::Second => self.cdf_parallel(f64::INFINITY, x),
        }
    }

    /// Density `f_j∥(x) = dF_j∥(x)/dx = λ_j f_j(x) ∂𝒞/∂u_j / λ∥`.
    pub fn parallel_marginal_density(&self, j: Margin, x: f64) -> Result<f64> {
        Self::check_size(x)?;
        let lp = self.require_parallel()?;
        let f = self.dist(j).pdf(x);
        if f == 0.0 {
            return Ok(0.0);
        }
        let t = self.marginal_tail(j, x);
        let d = match j {
            Margin::First => self.copula.du_unchecked(t, self.lambda2),
            Margin::Second => self.copula.dv_unchecked(self.lambda1, t),
        };
        Ok(self.lambda(j) * f * d / lp)
    }

    /// Inverse of `F_j∥`; takes the survival level `s = 1 − p` directly.
    pub fn parallel_marginal_quantile_survival(&self, j: Margin, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("survival level {s} outside [0, 1]")));
        }
        let lp = self.require_parallel()?;
        let other = match j {
            Margin::First => self.lambda2,
            Margin::Second => self.lambda1,
        };
        // 𝒞 is symmetric, so margin 2 inverts the same way
        let t = self.copula.inverse_first(s * lp, other).min(self.lambda(j));
        self.dist(j).quantile_survival(t / self.lambda(j))
    }

    /// Inverse of `F_j⊥`, by bisection on the tail mass `t = λ_j F̄_j(x)`.
    pub fn perp_quantile_survival(&self, j: Margin, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("survival level {s} outside [0, 1]")));
        }
        let lp = self.require_perp(j)?;
        let lambda = self.lambda(j);
        let target = s * lp;
        let excess = |t: f64| match j {
            Margin::First => self.copula.excess_first(t, self.lambda2),
            Margin::Second => self.copula.excess_second(self.lambda1, t),
        };
        let t = match self.copula {
            LevyCopula::PureCommonShock { .. } => s * lambda,
            LevyCopula::Clayton { .. } => {
                // t ↦ t − 𝒞(t, λ_other) is increasing from 0 to λ_j⊥
                let (mut lo, mut hi) = (0.0f64, lambda);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if excess(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        self.dist(j).quantile_survival((t / lambda).min(1.0))
    }

    /// Distributional copula of `F∥` implied by a Clayton Lévy copula:
    /// `C(u, v) = ((1−u)^−δ + (1−v)^−δ − 1)^(−1/δ) + u + v − 1`.
    pub fn implied_distributional_copula(&self, u: f64, v: f64) -> Result<f64> {
        let delta = match self.copula {
            LevyCopula::Clayton { delta } => delta,
            LevyCopula::PureCommonShock { .. } => {
                return Err(Error::Unsupported(
                    "implied distributional copula is only available for Clayton".into(),
                ))
            }
        };
        for (name, p) in [("u", u), ("v", v)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("{name} = {p} outside [0, 1]")));
            }
        }
        let survival = if u == 1.0 || v == 1.0 {
            0.0
        } else {
            let a = -delta * (-u).ln_1p();
            let b = -delta * (-v).ln_1p();
            // ln((1−u)^−δ + (1−v)^−δ − 1) with the larger exponent factored out
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let inner = hi + ((lo - hi).exp() - (-hi).exp()).ln_1p();
            (-inner / delta).exp()
        };
        let value = survival + u + v - 1.0;
        Ok(value.max((u + v - 1.0).max(0.0)).min(u.min(v)))
    }
}
