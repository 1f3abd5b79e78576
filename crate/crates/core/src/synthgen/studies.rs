//! Simulation studies: repeated draws from a generator, one test per draw.
//!
//! Trial `t` of a study with master seed `s` draws its data and its swap
//! coins from `derive_seed(s, t)`, so every cell of a grid sees the same
//! trial seeds and results do not depend on thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gen_expertise_pairs, gen_toy, gen_validity_cube, ExpertiseConfig, ToyExampleConfig};
use crate::dataset::Dataset;
use crate::engine::{expert_test_with_matching, TestConfig};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::matching::greedy_match;
use crate::metric::DistanceMetric;
use crate::rng::derive_seed;

/// Rejection tally over independent trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyOutcome {
    pub trials: usize,
    pub rejections: usize,
    pub rate: f64,
    /// Monte-Carlo standard error of `rate`.
    pub mc_sd: f64,
    pub taus: Vec<f64>,
}

impl StudyOutcome {
    fn from_taus(taus: Vec<f64>, alpha: f64) -> Self {
        let trials = taus.len();
        let rejections = taus.iter().filter(|&&t| t <= alpha).count();
        let rate = rejections as f64 / trials as f64;
        Self {
            trials,
            rejections,
            rate,
            mc_sd: (rate * (1.0 - rate) / trials as f64).sqrt(),
            taus,
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    Ok(())
}

/// `τ` for each requested `L` on one dataset, sharing one greedy matching.
fn taus_over_pairs(d: &Dataset, pair_counts: &[usize], base: &TestConfig) -> Result<Vec<f64>> {
    let max_pairs = pair_counts.iter().copied().max().unwrap_or(0);
    let matching = greedy_match(d, max_pairs, &base.metric)?;
    pair_counts
        .iter()
        .map(|&pairs| {
            let cfg = TestConfig { pairs, ..base.clone() };
            Ok(expert_test_with_matching(d, &matching, &cfg)?.tau)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyStudyConfig {
    pub n: usize,
    pub pairs: usize,
    pub resamples: usize,
    pub alpha: f64,
    pub include_u_in_features: bool,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for ToyStudyConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            pairs: 100,
            resamples: 100,
            alpha: 0.05,
            include_u_in_features: false,
            trials: 100,
            master_seed: 0,
        }
    }
}

/// Toy world under squared-error loss and Euclidean pairing.
pub fn run_toy_study(cfg: &ToyStudyConfig) -> Result<StudyOutcome> {
    check_trials(cfg.trials)?;
    let taus = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(cfg.master_seed, trial);
            let d = gen_toy(&ToyExampleConfig {
                n: cfg.n,
                seed,
                include_u_in_features: cfg.include_u_in_features,
            })?;
            let test = TestConfig::new(cfg.pairs, cfg.resamples, cfg.alpha, LossSpec::SquaredError).with_seed(seed);
            Ok(crate::engine::expert_test(&d, &test)?.tau)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(StudyOutcome::from_taus(taus, cfg.alpha))
}

/// How `L` is chosen from `n` in a power grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PairRule {
    Fixed(usize),
    /// `L = n / divisor` (integer division).
    FractionOfN(usize),
}

impl PairRule {
    pub fn pairs_for(&self, n: usize) -> usize {
        match *self {
            PairRule::Fixed(l) => l,
            PairRule::FractionOfN(divisor) => n / divisor.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurveConfig {
    pub n_values: Vec<usize>,
    pub delta_values: Vec<f64>,
    pub pair_rule: PairRule,
    pub resamples: usize,
    pub alpha: f64,
    pub trials: usize,
    pub master_seed: u64,
}

/// One cell of a power grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub n: usize,
    pub delta: f64,
    pub pairs: usize,
    pub trials: usize,
    pub rejections: usize,
    pub rate: f64,
    pub mc_sd: f64,
}

impl PowerRow {
    fn new(n: usize, delta: f64, pairs: usize, outcome: &StudyOutcome) -> Self {
        Self {
            n,
            delta,
            pairs,
            trials: outcome.trials,
            rejections: outcome.rejections,
            rate: outcome.rate,
            mc_sd: outcome.mc_sd,
        }
    }
}

fn expertise_taus(
    n: usize,
    delta: f64,
    pair_counts: &[usize],
    resamples: usize,
    alpha: f64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    // per trial, one τ per entry of `pair_counts`
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(master_seed, trial);
            let d = gen_expertise_pairs(&ExpertiseConfig { n, delta, seed })?;
            let base = TestConfig::new(1, resamples, alpha, LossSpec::ZeroOne).with_seed(seed);
            taus_over_pairs(&d, pair_counts, &base)
        })
        .collect()
}

/// Rejection rate of the δ-expertise world over an `(n, δ)` grid, zero-one loss.
pub fn run_power_curve(cfg: &PowerCurveConfig) -> Result<Vec<PowerRow>> {
    check_trials(cfg.trials)?;
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let pairs = cfg.pair_rule.pairs_for(n);
        for &delta in &cfg.delta_values {
            let taus = expertise_taus(
                n,
                delta,
                &[pairs],
                cfg.resamples,
                cfg.alpha,
                cfg.trials,
                cfg.master_seed,
            )?;
            let outcome = StudyOutcome::from_taus(taus.into_iter().map(|t| t[0]).collect(), cfg.alpha);
            rows.push(PowerRow::new(n, delta, pairs, &outcome));
        }
    }
    Ok(rows)
}

/// Rejection rate of the δ-expertise world at fixed `(n, δ)` across several `L`.
pub fn run_power_vs_pairs(
    n: usize,
    delta: f64,
    pair_counts: &[usize],
    resamples: usize,
    alpha: f64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<PowerRow>> {
    check_trials(trials)?;
    let taus = expertise_taus(n, delta, pair_counts, resamples, alpha, trials, master_seed)?;
    Ok(pair_counts
        .iter()
        .enumerate()
        .map(|(col, &pairs)| {
            let outcome = StudyOutcome::from_taus(taus.iter().map(|t| t[col]).collect(), alpha);
            PowerRow::new(n, delta, pairs, &outcome)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Type1CurveConfig {
    pub n: usize,
    pub pair_counts: Vec<usize>,
    pub resamples: usize,
    pub alpha: f64,
    pub loss: LossSpec,
    pub trials: usize,
    pub master_seed: u64,
}

impl Type1CurveConfig {
    pub fn new(
        n: usize,
        pair_counts: Vec<usize>,
        resamples: usize,
        alpha: f64,
        trials: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            n,
            pair_counts,
            resamples,
            alpha,
            loss: LossSpec::SquaredError,
            trials,
            master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type1Row {
    pub n: usize,
    pub pairs: usize,
    pub trials: usize,
    pub rejections: usize,
    pub rate: f64,
    pub mc_sd: f64,
}

/// False-rejection rate on the validity cube for each `L`.
pub fn run_type1_curve(cfg: &Type1CurveConfig) -> Result<Vec<Type1Row>> {
    check_trials(cfg.trials)?;
    if let Some(&too_big) = cfg.pair_counts.iter().find(|&&l| l > cfg.n / 2) {
        return Err(Error::TooManyPairs {
            requested: too_big,
            max: cfg.n / 2,
        });
    }
    let taus = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(cfg.master_seed, trial);
            let d = gen_validity_cube(cfg.n, seed)?;
            let base = TestConfig::new(1, cfg.resamples, cfg.alpha, cfg.loss)
                .with_metric(DistanceMetric::Euclidean)
                .with_seed(seed);
            taus_over_pairs(&d, &cfg.pair_counts, &base)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cfg
        .pair_counts
        .iter()
        .enumerate()
        .map(|(col, &pairs)| {
            let outcome = StudyOutcome::from_taus(taus.iter().map(|t| t[col]).collect(), cfg.alpha);
            Type1Row {
                n: cfg.n,
                pairs,
                trials: outcome.trials,
                rejections: outcome.rejections,
                rate: outcome.rate,
                mc_sd: outcome.mc_sd,
            }
        })
        .collect())
}
