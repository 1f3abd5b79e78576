//! Type-I error control for approximate pairs.
//!
//! Swapping predictions between records with different features is only
//! approximately fair. The per-pair odds ratio
//!
//! ```text
//! r = q(ŷ₁|x₁) q(ŷ₂|x₂) / (q(ŷ₂|x₁) q(ŷ₁|x₂))
//! ```
//!
//! measures how far the swap is from a fair coin; `ε* = max |1/(1+r) − 1/2|`
//! over pairs feeds the bounds below.

use std::fmt;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::metric::DistanceMetric;

/// Conditional density of a prediction given features: `q(y_hat | x)`.
pub type DensityFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Where odds ratios come from.
pub enum OddsRatioSource {
    /// The prediction density is known, e.g. in a simulation.
    KnownDensity(Box<DensityFn>),
    /// Only a smoothness constant `C` is known:
    /// `q(ŷ|x) / q(ŷ|x') ≤ 1 + C‖x − x'‖₂` for all `ŷ`.
    Smoothness(f64),
}

impl fmt::Debug for OddsRatioSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OddsRatioSource::KnownDensity(_) => f.write_str("KnownDensity(..)"),
            OddsRatioSource::Smoothness(c) => f.debug_tuple("Smoothness").field(c).finish(),
        }
    }
}

fn swap_deviation(odds_ratio: f64) -> f64 {
    (1.0 / (1.0 + odds_ratio) - 0.5).abs()
}

/// Worst swap deviation over the odds-ratio interval `[(1+C·dist)^-2, (1+C·dist)^2]`.
pub fn smoothness_deviation(smoothness: f64, distance: f64) -> f64 {
    let hi = (1.0 + smoothness * distance).powi(2);
    swap_deviation(hi).max(swap_deviation(1.0 / hi))
}

fn check_smoothness(c: f64) -> Result<()> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "smoothness constant must be finite and nonnegative, got {c}"
        )));
    }
    Ok(())
}

/// `ε*` for a matching.
///
/// With a known density the odds ratio is evaluated at each pair's observed
/// `(x, ŷ)`. Under smoothness the Euclidean pair distance bounds the odds
/// ratio and the worst end of the interval is taken.
pub fn epsilon_star(d: &Dataset, m: &Matching, src: &OddsRatioSource) -> Result<f64> {
    m.check_indices(d.len())?;
    let mut worst = 0.0f64;
    match src {
        OddsRatioSource::KnownDensity(q) => {
            for (l, &(i, j)) in m.pairs().iter().enumerate() {
                let (a, b) = (d.get(i), d.get(j));
                let terms = [q(&a.x, a.y_hat), q(&b.x, b.y_hat), q(&a.x, b.y_hat), q(&b.x, a.y_hat)];
                if let Some(&bad) = terms.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::DensityEvaluationFailure { pair: l, value: bad });
                }
                let r = (terms[0] * terms[1]) / (terms[2] * terms[3]);
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::DensityEvaluationFailure { pair: l, value: r });
                }
                worst = worst.max(swap_deviation(r));
            }
        }
        OddsRatioSource::Smoothness(c) => {
            check_smoothness(*c)?;
            let l2 = DistanceMetric::Euclidean;
            for &(i, j) in m.pairs() {
                worst = worst.max(smoothness_deviation(*c, l2.distance(d.x(i), d.x(j))));
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Type1Bound {
    /// `α + (1 − (1 − ε*)^L) + 1/(K+1)`.
    pub tight: f64,
    /// `α + ε*·L + 1/(K+1)`.
    pub union: f64,
}

fn resample_slack(resamples: Option<usize>) -> f64 {
    resamples.map_or(0.0, |k| 1.0 / (k as f64 + 1.0))
}

/// Probability that `L` coins with deviation at most `max_dev` from fair
/// differ from fair coins under the best coupling: `1 − (1 − max_dev)^L`.
fn coupling_gap(max_dev: f64, pairs: usize) -> f64 {
    1.0 - (1.0 - max_dev).powi(pairs as i32)
}

/// Upper bounds on the false-rejection probability, clipped to `[0, 1]`.
///
/// `resamples = None` gives the `K → ∞` limit.
pub fn type1_bound(alpha: f64, epsilon_star: f64, pairs: usize, resamples: Option<usize>) -> Type1Bound {
    let slack = resample_slack(resamples);
    Type1Bound {
        tight: (alpha + coupling_gap(epsilon_star, pairs) + slack).clamp(0.0, 1.0),
        union: (alpha + epsilon_star * pairs as f64 + slack).clamp(0.0, 1.0),
    }
}

/// Rejection level that keeps the type-I error at `alpha` given a smoothness constant.
///
/// Uses the matching's largest pair distance (assumed Euclidean) to bound `ε*`,
/// then returns `max(0, α − (1 − (1 − ε*)^L) − 1/(K+1))`.
pub fn adjusted_threshold(alpha: f64, smoothness: f64, m: &Matching, pairs: usize, resamples: usize) -> f64 {
    let eps = smoothness_deviation(smoothness, m.max_distance());
    (alpha - coupling_gap(eps, pairs) - resample_slack(Some(resamples))).max(0.0)
}

/// Total-variation bound between fair coins and coins with the given deviations.
pub fn tv_coin_bound(deviations: &[f64]) -> f64 {
    let max_dev = deviations.iter().copied().fold(0.0, f64::max);
    coupling_gap(max_dev, deviations.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityBound {
    pub epsilon_star: f64,
    pub tight_bound: f64,
    pub union_bound: f64,
    pub adjusted_threshold: f64,
}

/// All validity quantities for a matching under a smoothness constant.
pub fn validity_bound(
    d: &Dataset,
    m: &Matching,
    smoothness: f64,
    alpha: f64,
    resamples: usize,
) -> Result<ValidityBound> {
    let eps = epsilon_star(d, m, &OddsRatioSource::Smoothness(smoothness))?;
    let bound = type1_bound(alpha, eps, m.len(), Some(resamples));
    Ok(ValidityBound {
        epsilon_star: eps,
        tight_bound: bound.tight,
        union_bound: bound.union,
        adjusted_threshold: adjusted_threshold(alpha, smoothness, m, m.len(), resamples),
    })
}
