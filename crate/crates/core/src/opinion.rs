//! Angle arithmetic on the opinion interval `[0, π]`.
//!
//! Opinions are stored in radians. The opinion space is a closed interval,
//! not a circle: `0` and `π` are maximally far apart.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Minimum acceptance probability tolerated by the truncated-normal sampler.
pub const MIN_ACCEPTANCE: f64 = 0.01;

#[inline]
pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

#[inline]
pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}

/// Agent type. Rigid agents have a low tolerance, flexible agents a high one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Rigid,
    Flexible,
}

/// Per-agent parameters. `self_weight` is owned by the engine and refreshed
/// from Katz centrality whenever the topology changes.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentParams {
    pub tolerance: f64,
    pub kind: AgentKind,
    pub sociability_base: f64,
    pub self_weight: f64,
}

impl AgentParams {
    pub fn new(kind: AgentKind, tolerance: f64, sociability_base: f64) -> Self {
        Self {
            tolerance,
            kind,
            sociability_base,
            self_weight: 0.5,
        }
    }

    /// Interaction count that a non-direct tie must exceed to be promoted.
    #[inline]
    pub fn sociability_index(&self) -> f64 {
        self.sociability_base * self.self_weight
    }
}

/// Opinion vector at time step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct OpinionState {
    pub theta: Vec<f64>,
    pub t: u32,
}

impl OpinionState {
    pub fn new(theta: Vec<f64>) -> Self {
        debug_assert!(theta.iter().all(|&x| (0.0..=PI).contains(&x)));
        Self { theta, t: 0 }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `max θ − min θ`, zero for an empty population.
    pub fn range(&self) -> f64 {
        opinion_range(&self.theta)
    }
}

pub fn opinion_range(theta: &[f64]) -> f64 {
    if theta.is_empty() {
        return 0.0;
    }
    let (lo, hi) = theta
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo
}

/// Bounded-confidence test: does an agent at `theta_i` with tolerance `tol_i`
/// accept influence from `theta_j`? The boundary is inclusive.
#[inline]
pub fn within_tolerance(theta_i: f64, theta_j: f64, tol_i: f64) -> bool {
    (theta_i - theta_j).abs() <= tol_i
}

/// Weighted circular mean of `(weight, angle)` pairs.
///
/// With non-negative weights and angles in `[0, π]` the sine sum is
/// non-negative, so `atan2` lands in `[0, π]` without any wrapping.
pub fn weighted_circular_update<I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    weighted_unit_mean(pairs.into_iter().map(|(w, theta)| (w, theta.sin_cos())))
}

/// [`weighted_circular_update`] over precomputed `(sin θ, cos θ)` pairs.
pub(crate) fn weighted_unit_mean<I>(items: I) -> Result<f64>
where
    I: IntoIterator<Item = (f64, (f64, f64))>,
{
    let mut sin_sum = 0.0;
    let mut cos_sum = 0.0;
    let mut total = 0.0;
    let mut count = 0usize;
    for (w, (s, c)) in items {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidInput(format!("negative or non-finite weight {w}")));
        }
        sin_sum += w * s;
        cos_sum += w * c;
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("empty influence set".into()));
    }
    if total <= 0.0 {
        return Err(Error::InvalidInput("all influence weights are zero".into()));
    }
    // rounding can push sin(π) a hair below zero
    Ok(sin_sum.max(0.0).atan2(cos_sum).clamp(0.0, PI))
}

/// Probability mass of `Normal(mu, sigma)` inside `[0, π]`.
pub fn truncation_mass(mu: f64, sigma: f64) -> f64 {
    let cdf = |x: f64| 0.5 * libm::erfc(-(x - mu) / (sigma * std::f64::consts::SQRT_2));
    cdf(PI) - cdf(0.0)
}

/// Draws `n` i.i.d. samples from `Normal(mu, sigma²)` truncated to `[0, π]`
/// by rejection.
pub fn sample_truncated_gaussian<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(mu > 0.0 && mu < PI) {
        return Err(Error::InvalidInput(format!("mean {mu} rad outside (0, π)")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("spread {sigma} rad must be positive")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let mass = truncation_mass(mu, sigma);
    if mass < MIN_ACCEPTANCE {
        return Err(Error::InvalidInput(format!(
            "truncated normal acceptance {mass:.4} below {MIN_ACCEPTANCE}"
        )));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = normal.sample(rng);
        if (0.0..=PI).contains(&x) {
            out.push(x);
        }
    }
    Ok(out)
}
