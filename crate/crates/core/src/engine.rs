//! The pair-swap test.
//!
//! `D_0` is the data restricted to the `L` matched pairs. Each resample
//! `D_k` swaps the predictions inside every pair independently with
//! probability 1/2, and
//!
//! ```text
//! τ = (1/K) · #{k : F(D_k) < F(D_0)}      (exact ties decided by a fair coin)
//! ```
//!
//! A small `τ` means the observed forecasts fit the outcomes better than
//! their within-pair swaps, which is evidence against `Y ⊥ Ŷ | X`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{is_binary_value, Dataset};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::matching::{greedy_match, Matching};
use crate::metric::DistanceMetric;
use crate::rng::SeededRng;

/// Cap on `increase + decrease` for [`exact_binary_p`].
pub const EXACT_BINARY_CAP: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Number of pairs `L`.
    pub pairs: usize,
    /// Number of resampled datasets `K`.
    pub resamples: usize,
    pub alpha: f64,
    pub loss: LossSpec,
    pub metric: DistanceMetric,
    pub master_seed: u64,
}

impl TestConfig {
    pub fn new(pairs: usize, resamples: usize, alpha: f64, loss: LossSpec) -> Self {
        Self {
            pairs,
            resamples,
            alpha,
            loss,
            metric: DistanceMetric::Euclidean,
            master_seed: 0,
        }
    }

    pub fn with_metric(mut self, metric: DistanceMetric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::InvalidConfig("pairs (L) must be at least 1".into()));
        }
        if self.resamples == 0 {
            return Err(Error::InvalidConfig("resamples (K) must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        self.loss.validate()
    }
}

/// Per-pair effect of a swap on the number of binary mistakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SwapCounts {
    /// Both records currently correct with different outcomes; swapping adds a FP and a FN.
    pub increase: usize,
    /// Both records currently wrong with different outcomes; swapping removes a FP and a FN.
    pub decrease: usize,
    /// Swapping changes no mistake.
    pub neutral: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub tau: f64,
    /// `τ + 1/(K+1)`, the smallest level at which this run rejects.
    pub effective_p: f64,
    pub rejected: bool,
    pub alpha: f64,
    pub pairs: usize,
    pub resamples: usize,
    pub mismatch_count: usize,
    pub observed_loss: f64,
    /// Present when every matched outcome and prediction is binary.
    pub binary_swap_counts: Option<SwapCounts>,
}

impl TestResult {
    /// `τ · K`, the number of resamples that beat the observed loss.
    pub fn tau_count(&self) -> usize {
        (self.tau * self.resamples as f64).round() as usize
    }
}

/// Applies a swap mask: pair `l` exchanges its predictions when `mask[l]` is set.
pub fn apply_swaps(d: &Dataset, m: &Matching, mask: &[bool]) -> Result<Dataset> {
    m.check_indices(d.len())?;
    if mask.len() != m.len() {
        return Err(Error::InvalidConfig(format!(
            "swap mask has {} entries for {} pairs",
            mask.len(),
            m.len()
        )));
    }
    let mut out = d.clone();
    for (&(i, j), &swap) in m.pairs().iter().zip(mask) {
        if swap {
            out.swap_predictions(i, j);
        }
    }
    Ok(out)
}

/// One resampled dataset: each pair's predictions are swapped when the
/// pair's coin in `rng` comes up heads. Features and outcomes never move.
pub fn resample_once(d: &Dataset, m: &Matching, rng: SeededRng) -> Result<Dataset> {
    apply_swaps(d, m, &rng.coins(m.len()))
}

/// `τ` from an observed loss and `K` resampled losses.
///
/// Comparison `k` counts 1 when `resampled[k] < observed`, 0 when greater,
/// and on an exact tie takes coin `k` of `rng`.
///
/// # Panics
///
/// If `resampled` is empty.
pub fn tau_statistic(observed: f64, resampled: &[f64], rng: SeededRng) -> f64 {
    assert!(!resampled.is_empty(), "tau needs at least one resample");
    tau_count(observed, resampled, rng) as f64 / resampled.len() as f64
}

fn tau_count(observed: f64, resampled: &[f64], rng: SeededRng) -> usize {
    resampled
        .iter()
        .enumerate()
        .filter(|&(k, &loss)| {
            if loss < observed {
                true
            } else if loss > observed {
                false
            } else {
                rng.coin(k as u64)
            }
        })
        .count()
}

/// Outcomes and predictions of the matched records, laid out pair by pair.
struct MatchedRecords {
    y: Vec<f64>,
    y_hat: Vec<f64>,
}

impl MatchedRecords {
    fn new(d: &Dataset, m: &Matching) -> Self {
        let mut y = Vec::with_capacity(2 * m.len());
        let mut y_hat = Vec::with_capacity(2 * m.len());
        for &(i, j) in m.pairs() {
            for k in [i, j] {
                y.push(d.get(k).y);
                y_hat.push(d.get(k).y_hat);
            }
        }
        Self { y, y_hat }
    }

    fn swapped(&self, mask: &[bool]) -> Vec<f64> {
        let mut out = self.y_hat.clone();
        for (l, &swap) in mask.iter().enumerate() {
            if swap {
                out.swap(2 * l, 2 * l + 1);
            }
        }
        out
    }
}

/// Loss of `D_0` and of the `K` resamples, resample `k` drawing its coins
/// from [`SeededRng::swap_stream`]`(master_seed, k)`.
pub fn resampled_losses(
    d: &Dataset,
    m: &Matching,
    loss: LossSpec,
    master_seed: u64,
    resamples: usize,
) -> Result<(f64, Vec<f64>)> {
    m.check_indices(d.len())?;
    let records = MatchedRecords::new(d, m);
    loss.check_domain(&records.y, &records.y_hat)?;
    let observed = loss.evaluate_unchecked(&records.y, &records.y_hat);
    let losses = (0..resamples)
        .into_par_iter()
        .with_min_len(8)
        .map(|k| {
            let mask = SeededRng::swap_stream(master_seed, k).coins(m.len());
            loss.evaluate_unchecked(&records.y, &records.swapped(&mask))
        })
        .collect();
    Ok((observed, losses))
}

/// Runs the full test: greedy matching, `K` resamples, `τ` and the decision.
pub fn expert_test(d: &Dataset, cfg: &TestConfig) -> Result<TestResult> {
    cfg.validate()?;
    if cfg.loss.is_binary() {
        cfg.loss.check_domain(&d.outcomes(), &d.predictions())?;
    }
    let m = greedy_match(d, cfg.pairs, &cfg.metric)?;
    expert_test_with_matching(d, &m, cfg)
}

/// Runs the test on the first `cfg.pairs` pairs of an existing matching.
///
/// Lets a sweep over `L` compute the greedy matching once at the largest `L`.
pub fn expert_test_with_matching(d: &Dataset, m: &Matching, cfg: &TestConfig) -> Result<TestResult> {
    cfg.validate()?;
    if cfg.pairs > m.len() {
        return Err(Error::TooManyPairs {
            requested: cfg.pairs,
            max: m.len(),
        });
    }
    let m = m.prefix(cfg.pairs);
    let (observed, losses) = resampled_losses(d, &m, cfg.loss, cfg.master_seed, cfg.resamples)?;
    let tau = tau_statistic(observed, &losses, SeededRng::tie_stream(cfg.master_seed));
    let binary_swap_counts = classify_swaps(d, &m).ok();
    Ok(TestResult {
        tau,
        effective_p: tau + 1.0 / (cfg.resamples as f64 + 1.0),
        rejected: tau <= cfg.alpha,
        alpha: cfg.alpha,
        pairs: cfg.pairs,
        resamples: cfg.resamples,
        mismatch_count: m.mismatch_count(),
        observed_loss: observed,
        binary_swap_counts,
    })
}

/// Classifies each matched pair by how a swap changes the binary mistake count.
pub fn classify_swaps(d: &Dataset, m: &Matching) -> Result<SwapCounts> {
    m.check_indices(d.len())?;
    let mut counts = SwapCounts::default();
    for &(i, j) in m.pairs() {
        for k in [i, j] {
            let o = d.get(k);
            if !(is_binary_value(o.y) && is_binary_value(o.y_hat)) {
                return Err(Error::NonBinaryData {
                    index: k,
                    y: o.y,
                    y_hat: o.y_hat,
                });
            }
        }
        let (a, b) = (d.get(i), d.get(j));
        if a.y != b.y && a.y_hat == a.y && b.y_hat == b.y {
            counts.increase += 1;
        } else if a.y != b.y && a.y_hat == b.y && b.y_hat == a.y {
            counts.decrease += 1;
        } else {
            counts.neutral += 1;
        }
    }
    Ok(counts)
}

fn half_binomial_pmf(trials: usize) -> Vec<f64> {
    let scale = 0.5f64.powi(trials as i32);
    let mut pmf = Vec::with_capacity(trials + 1);
    let mut coeff = 1.0f64;
    for k in 0..=trials {
        pmf.push(coeff * scale);
        coeff = coeff * (trials - k) as f64 / (k + 1) as f64;
    }
    pmf
}

/// Expected `τ` for binary data with `increase` and `decrease` loss-changing pairs.
///
/// With `X ~ Bin(increase, 1/2)` executed loss-raising swaps and
/// `Y ~ Bin(decrease, 1/2)` executed loss-lowering swaps, a resample beats
/// the observed loss when `Y > X` and ties when `Y = X`, so this returns
/// `P(Y > X) + P(Y = X) / 2`.
pub fn exact_binary_p(increase: usize, decrease: usize) -> Result<f64> {
    let total = increase + decrease;
    if total > EXACT_BINARY_CAP {
        return Err(Error::EnumerationTooLarge {
            total,
            cap: EXACT_BINARY_CAP,
        });
    }
    let px = half_binomial_pmf(increase);
    let py = half_binomial_pmf(decrease);
    let mut p = 0.0;
    for (x, &wx) in px.iter().enumerate() {
        for (y, &wy) in py.iter().enumerate() {
            if y > x {
                p += wx * wy;
            } else if y == x {
                p += 0.5 * wx * wy;
            }
        }
    }
    Ok(p)
}
