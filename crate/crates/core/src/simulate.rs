//! Exact path sampling and aggregation into interval panels.
//!
//! A path is drawn as three independent compound Poisson processes: the two
//! independent parts and the common shocks. Counts are drawn directly from
//! their own Poisson laws. Common-shock pairs are drawn sequentially: `x` from
//! the first marginal of `F∥`, then `y` from the conditional law `H_x`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{BcppModel, LevyCopula, Margin};

/// Which subprocess produced an event. Never used by estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Perp1,
    Perp2,
    Common,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Perp1 => "perp1",
            Origin::Perp2 => "perp2",
            Origin::Common => "common",
        }
    }
}

impl std::str::FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "perp1" => Ok(Origin::Perp1),
            "perp2" => Ok(Origin::Perp2),
            "common" => Ok(Origin::Common),
            other => Err(Error::Parse(format!("unknown origin label '{other}'"))),
        }
    }
}

/// One jump of the bivariate process. A zero amount means "no jump in that
/// margin".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub amount1: f64,
    pub amount2: f64,
    pub origin: Option<Origin>,
}

/// Per-interval maxima `z` and counts `n` over `[0, T]` split into `M` equal
/// intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPanel {
    horizon: f64,
    z: Vec<[f64; 2]>,
    n: Vec<[u32; 2]>,
}

impl IntervalPanel {
    pub fn new(horizon: f64, z: Vec<[f64; 2]>, n: Vec<[u32; 2]>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Input(format!("horizon must be finite and > 0, got {horizon}")));
        }
        if z.is_empty() {
            return Err(Error::Input("panel needs at least one interval".into()));
        }
        if z.len() != n.len() {
            return Err(Error::Input(format!(
                "panel has {} maxima rows but {} count rows",
                z.len(),
                n.len()
            )));
        }
        for (i, (zr, nr)) in z.iter().zip(&n).enumerate() {
            for j in 0..2 {
                let zij = zr[j];
                if !(zij.is_finite() && zij >= 0.0) {
                    return Err(Error::Input(format!(
                        "row {}: maximum z{} = {zij} must be finite and >= 0",
                        i + 1,
                        j + 1
                    )));
                }
                if (nr[j] == 0) != (zij == 0.0) {
                    return Err(Error::Input(format!(
                        "row {}: count n{} = {} inconsistent with maximum {zij}",
                        i + 1,
                        j + 1,
                        nr[j]
                    )));
                }
            }
        }
        Ok(Self { horizon, z, n })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        self.z.len()
    }

    /// Interval length `T / M`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.z.len() as f64
    }

    pub fn maxima(&self) -> &[[f64; 2]] {
        &self.z
    }

    pub fn counts(&self) -> &[[u32; 2]] {
        &self.n
    }

    /// Column sums of the count matrix.
    pub fn total_counts(&self) -> [u64; 2] {
        self.n.iter().fold([0, 0], |acc, r| {
            [acc[0] + u64::from(r[0]), acc[1] + u64::from(r[1])]
        })
    }
}

/// How `f₁∥` is evaluated inside the conditional sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityMode {
    #[default]
    Analytic,
    /// Central difference of `F₁∥` with step `1e-6 · max(x, 1)`.
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SamplerOptions {
    pub density_mode: DensityMode,
}

/// Tolerance on `|H_x(y) − p|` for the conditional inverse.
const CONDITIONAL_TOL: f64 = 1e-10;

/// Conditional law `H_x(y) = F₁∥(x, y) / f₁∥(x)` of the second common-shock
/// component given the first.
pub fn conditional_cdf(m: &BcppModel, x: f64, y: f64) -> Result<f64> {
    conditional_cdf_with(m, x, y, DensityMode::Analytic)
}

fn conditional_cdf_with(m: &BcppModel, x: f64, y: f64, mode: DensityMode) -> Result<f64> {
    if y.is_nan() || y < 0.0 {
        return Err(Error::Domain(format!("jump size must be >= 0, got {y}")));
    }
    match mode {
        DensityMode::Analytic => {
            let c = m.copula();
            let l2 = m.lambda(Margin::Second);
            let u = m.marginal_tail(Margin::First, x);
            let v = m.marginal_tail(Margin::Second, y);
            let denom = c.du_unchecked(u, l2);
            if !(denom > 0.0) || m.dist(Margin::First).pdf(x) == 0.0 {
                return Err(Error::Domain(format!(
                    "common-shock marginal density vanishes at x = {x}"
                )));
            }
            // 1 − ∂𝒞(u, v)/∂u ÷ ∂𝒞(u, λ₂)/∂u; the λ₁f₁/λ∥ prefactors cancel
            let h = 1.0 - c.du_unchecked(u, v) / denom;
            crate::model::clamp_probability(h.max(0.0), "conditional distribution")
        }
        DensityMode::CentralDifference => {
            let h = 1e-6 * x.max(1.0);
            let lo = (x - h).max(0.0);
            let f1 = (m.parallel_marginal_cdf(Margin::First, x + h)?
                - m.parallel_marginal_cdf(Margin::First, lo)?)
                / (x + h - lo);
            if !(f1 > 0.0) {
                return Err(Error::Domain(format!(
                    "common-shock marginal density vanishes at x = {x}"
                )));
            }
            let d1 = m.parallel_partials(x, y)?.d1;
            Ok((d1 / f1).clamp(0.0, 1.0))
        }
    }
}

/// Returns `y` with `|H_x(y) − p| < 1e-10`, by bisection.
pub fn conditional_quantile(m: &BcppModel, x: f64, p: f64) -> Result<f64> {
    conditional_quantile_with(m, x, p, DensityMode::Analytic)
}

pub fn conditional_quantile_with(m: &BcppModel, x: f64, p: f64, mode: DensityMode) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    if m.lambda_parallel() <= 0.0 {
        return Err(Error::Degenerate("dependent part has zero frequency"));
    }
    let h = |y: f64| conditional_cdf_with(m, x, y, mode);

    let mut hi = m.dist(Margin::Second).quantile(1.0 - 1e-6)?;
    let mut h_hi = h(hi)?;
    let mut doublings = 0;
    while h_hi < p {
        if doublings == 200 || !hi.is_finite() {
            return Err(Error::Numeric(format!(
                "conditional quantile not bracketed: x = {x}, p = {p}, H_x({hi}) = {h_hi}"
            )));
        }
        hi *= 2.0;
        h_hi = h(hi)?;
        doublings += 1;
    }
    let mut lo = 0.0f64;
    let mut mid = 0.5 * hi;
    for _ in 0..400 {
        mid = 0.5 * (lo + hi);
        let hm = h(mid)?;
        if (hm - p).abs() < CONDITIONAL_TOL {
            return Ok(mid);
        }
        if hm < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    // H_x can jump by more than the tolerance between adjacent floats only
    // where the density is enormous; the bracket is then as tight as it gets
    Ok(mid)
}

/// Derives the seed of substream `index` from a master seed (SplitMix64
/// finalizer over both words).
pub fn substream_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform on the open interval `(0, 1)`.
fn open01<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::Numeric(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Draws one path of the process on `(0, T]`, sorted by time.
pub fn sample_path(m: &BcppModel, horizon: f64, seed: u64) -> Result<Vec<EventRecord>> {
    sample_path_with(m, horizon, seed, &SamplerOptions::default())
}

pub fn sample_path_with(
    m: &BcppModel,
    horizon: f64,
    seed: u64,
    options: &SamplerOptions,
) -> Result<Vec<EventRecord>> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be finite and > 0, got {horizon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = poisson_count(&mut rng, m.lambda_perp(Margin::First) * horizon)?;
    let n2 = poisson_count(&mut rng, m.lambda_perp(Margin::Second) * horizon)?;
    let nc = poisson_count(&mut rng, m.lambda_parallel() * horizon)?;

    let mut events = Vec::with_capacity((n1 + n2 + nc) as usize);
    // 1 − U lies in (0, 1], so times land in (0, T]
    let time = |rng: &mut ChaCha8Rng| horizon * (1.0 - rng.random::<f64>());

    for _ in 0..n1 {
        let t = time(&mut rng);
        let x = m.perp_quantile_survival(Margin::First, open01(&mut rng))?;
        events.push(EventRecord { time: t, amount1: x, amount2: 0.0, origin: Some(Origin::Perp1) });
    }
    for _ in 0..n2 {
        let t = time(&mut rng);
        let y = m.perp_quantile_survival(Margin::Second, open01(&mut rng))?;
        events.push(EventRecord { time: t, amount1: 0.0, amount2: y, origin: Some(Origin::Perp2) });
    }
    for _ in 0..nc {
        let t = time(&mut rng);
        let (x, y) = sample_common_pair(m, &mut rng, options.density_mode)?;
        events.push(EventRecord { time: t, amount1: x, amount2: y, origin: Some(Origin::Common) });
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(events)
}

fn sample_common_pair<R: Rng>(m: &BcppModel, rng: &mut R, mode: DensityMode) -> Result<(f64, f64)> {
    let x = m.parallel_marginal_quantile_survival(Margin::First, open01(rng))?;
    let p = open01(rng);
    let y = match m.copula() {
        // components of S∥ are independent with the marginal laws
        LevyCopula::PureCommonShock { .. } => m.dist(Margin::Second).quantile(p)?,
        LevyCopula::Clayton { .. } => conditional_quantile_with(m, x, p, mode)?,
    };
    Ok((x, y))
}

/// Buckets events into `M` equal intervals `((i−1)T/M, iT/M]`.
pub fn aggregate(events: &[EventRecord], horizon: f64, intervals: usize) -> Result<IntervalPanel> {
    if intervals == 0 {
        return Err(Error::Input("interval count must be >= 1".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Input(format!("horizon must be finite and > 0, got {horizon}")));
    }
    let mut z = vec![[0.0f64; 2]; intervals];
    let mut n = vec![[0u32; 2]; intervals];
    let width = horizon / intervals as f64;
    for (k, e) in events.iter().enumerate() {
        if !(e.time > 0.0 && e.time <= horizon) {
            return Err(Error::Input(format!(
                "event {} at time {} outside (0, {horizon}]",
                k + 1,
                e.time
            )));
        }
        let mut i = ((e.time / width).ceil() as usize).clamp(1, intervals) - 1;
        // guard against the division rounding across a boundary
        if e.time <= i as f64 * width && i > 0 {
            i -= 1;
        } else if e.time > (i + 1) as f64 * width && i + 1 < intervals {
            i += 1;
        }
        for (j, amount) in [e.amount1, e.amount2].into_iter().enumerate() {
            if amount.is_nan() || amount < 0.0 {
                return Err(Error::Input(format!("event {} has negative amount {amount}", k + 1)));
            }
            if amount > 0.0 {
                n[i][j] += 1;
                z[i][j] = z[i][j].max(amount);
            }
        }
    }
    IntervalPanel::new(horizon, z, n)
}

/// All positive jump sizes per margin, in event order.
pub fn marginal_jump_vectors(events: &[EventRecord]) -> (Vec<f64>, Vec<f64>) {
    let s1 = events.iter().map(|e| e.amount1).filter(|&a| a > 0.0).collect();
    let s2 = events.iter().map(|e| e.amount2).filter(|&a| a > 0.0).collect();
    (s1, s2)
}
