//! Synthetic worlds with known ground truth.
//!
//! - [`gen_toy`]: an expert who sees a private signal `U` but reports a
//!   coarse, noisy forecast.
//! - [`gen_expertise_pairs`]: exactly duplicated feature pairs with a
//!   tunable expertise level `δ`.
//! - [`gen_validity_cube`]: continuous features where the null holds.
//!
//! The study runners in [`studies`] sweep these generators through the test.

mod studies;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Observation};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SeededRng};

pub use studies::{
    run_power_curve, run_power_vs_pairs, run_toy_study, run_type1_curve, PairRule, PowerCurveConfig, PowerRow,
    StudyOutcome, ToyStudyConfig, Type1CurveConfig, Type1Row,
};

/// `sign(v) = 1[v > 0] − 1[v < 0]`, so `sign(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need n >= 2, got {n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyExampleConfig {
    pub n: usize,
    pub seed: u64,
    /// Record the private signal `U` as a second feature.
    pub include_u_in_features: bool,
}

/// Toy world: `X ~ U[-2,2]`, `U ~ U[-1,1]`, `Y = X + U + ε₁`,
/// `Ŷ = sign(X) + sign(U) + ε₂` with standard normal noise.
///
/// Features are `[x]`, or `[x, u]` when `U` is recorded.
pub fn gen_toy(cfg: &ToyExampleConfig) -> Result<Dataset> {
    check_n(cfg.n)?;
    let mut rng = SeededRng::data_stream(cfg.seed).generator();
    let observations = (0..cfg.n)
        .map(|_| {
            let x: f64 = rng.random_range(-2.0..2.0);
            let u: f64 = rng.random_range(-1.0..1.0);
            let e1: f64 = rng.sample(StandardNormal);
            let e2: f64 = rng.sample(StandardNormal);
            let features = if cfg.include_u_in_features { vec![x, u] } else { vec![x] };
            Observation::new(features, x + u + e1, sign(x) + sign(u) + e2)
        })
        .collect();
    Dataset::new(observations)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertiseConfig {
    /// Even number of records.
    pub n: usize,
    /// Expertise in `[0, 1/2]`.
    pub delta: f64,
    pub seed: u64,
}

/// Duplicated features `x = [1, 1, 2, 2, ...]`, alternating outcomes
/// `y = [0, 1, 0, 1, ...]`; each pair's predictions equal its outcomes
/// with probability `1/2 + δ` and are reversed otherwise.
pub fn gen_expertise_pairs(cfg: &ExpertiseConfig) -> Result<Dataset> {
    check_n(cfg.n)?;
    if !cfg.n.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("n must be even, got {}", cfg.n)));
    }
    if !(0.0..=0.5).contains(&cfg.delta) {
        return Err(Error::InvalidConfig(format!(
            "delta must lie in [0, 0.5], got {}",
            cfg.delta
        )));
    }
    let mut rng = SeededRng::data_stream(cfg.seed).generator();
    let mut observations = Vec::with_capacity(cfg.n);
    for pair in 0..cfg.n / 2 {
        let x = (pair + 1) as f64;
        let correct = rng.random_bool(0.5 + cfg.delta);
        let (h0, h1) = if correct { (0.0, 1.0) } else { (1.0, 0.0) };
        observations.push(Observation::new(vec![x], 0.0, h0));
        observations.push(Observation::new(vec![x], 1.0, h1));
    }
    Dataset::new(observations)
}

/// Null world: `X ~ U[0,10]^3`, `Y = ΣX + ε₁`, `Ŷ = ΣX + ε₂`.
pub fn gen_validity_cube(n: usize, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let mut rng = SeededRng::data_stream(seed).generator();
    let observations = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..10.0)).collect();
            let s: f64 = x.iter().sum();
            let e1: f64 = rng.sample(StandardNormal);
            let e2: f64 = rng.sample(StandardNormal);
            Observation::new(x, s + e1, s + e2)
        })
        .collect();
    Dataset::new(observations)
}

/// In-sample least-squares fit of `y ≈ β·ŷ + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlsFit {
    pub beta: f64,
    pub intercept: f64,
    pub mse: f64,
}

pub fn ols_rescale(y: &[f64], y_hat: &[f64]) -> Result<OlsFit> {
    let n = y.len() as f64;
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(Error::InvalidDataset("regression needs equal nonempty columns".into()));
    }
    let my = y.iter().sum::<f64>() / n;
    let mh = y_hat.iter().sum::<f64>() / n;
    let sxx: f64 = y_hat.iter().map(|h| (h - mh) * (h - mh)).sum();
    let sxy: f64 = y_hat.iter().zip(y).map(|(h, v)| (h - mh) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression);
    }
    let beta = sxy / sxx;
    let intercept = my - beta * mh;
    let mse = mean_squared(y, y_hat.iter().map(|h| beta * h + intercept));
    Ok(OlsFit { beta, intercept, mse })
}

fn mean_squared(y: &[f64], pred: impl Iterator<Item = f64>) -> f64 {
    y.iter().zip(pred).map(|(v, p)| (v - p) * (v - p)).sum::<f64>() / y.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Self { mean, sd: var.sqrt() }
    }
}

impl std::fmt::Display for MeanSd {
    /// `mean ± 2·sd`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, 2.0 * self.sd)
    }
}

/// Squared error of the feature-only predictor `E[Y|X] = X`, of the raw
/// expert forecast, and of the expert forecast after in-sample OLS rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseComparison {
    pub trials: usize,
    pub algorithm: MeanSd,
    pub human: MeanSd,
    pub rescaled: MeanSd,
}

pub fn mse_comparison(n: usize, trials: usize, seed: u64) -> Result<MseComparison> {
    if n < 10 || trials < 2 {
        return Err(Error::InvalidConfig(format!(
            "need n >= 10 and trials >= 2, got n={n}, trials={trials}"
        )));
    }
    let mut columns = [Vec::new(), Vec::new(), Vec::new()];
    for trial in 0..trials {
        let d = gen_toy(&ToyExampleConfig {
            n,
            seed: derive_seed(seed, trial),
            include_u_in_features: false,
        })?;
        let y = d.outcomes();
        let y_hat = d.predictions();
        columns[0].push(mean_squared(&y, d.observations().iter().map(|o| o.x[0])));
        columns[1].push(mean_squared(&y, y_hat.iter().copied()));
        columns[2].push(ols_rescale(&y, &y_hat)?.mse);
    }
    Ok(MseComparison {
        trials,
        algorithm: MeanSd::of(&columns[0]),
        human: MeanSd::of(&columns[1]),
        rescaled: MeanSd::of(&columns[2]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{dataset_loss, LossSpec};
    use crate::matching::greedy_match;
    use crate::metric::DistanceMetric;

    /// Asymptotic Kolmogorov-Smirnov p-value against a uniform law on `[lo, hi]`.
    fn ks_uniform_p(mut sample: Vec<f64>, lo: f64, hi: f64) -> f64 {
        sample.sort_by(f64::total_cmp);
        let n = sample.len() as f64;
        let d = sample
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max);
        let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
        let p: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum();
        p.clamp(0.0, 1.0)
    }

    #[test]
    fn toy_marginals_are_uniform() {
        let d = gen_toy(&ToyExampleConfig {
            n: 10_000,
            seed: 2024,
            include_u_in_features: true,
        })
        .unwrap();
        let xs = d.observations().iter().map(|o| o.x[0]).collect();
        let us = d.observations().iter().map(|o| o.x[1]).collect();
        assert!(ks_uniform_p(xs, -2.0, 2.0) > 0.01);
        assert!(ks_uniform_p(us, -1.0, 1.0) > 0.01);
    }

    #[test]
    fn ks_detects_wrong_range() {
        let d = gen_toy(&ToyExampleConfig {
            n: 10_000,
            seed: 2024,
            include_u_in_features: true,
        })
        .unwrap();
        let us = d.observations().iter().map(|o| o.x[1]).collect();
        assert!(ks_uniform_p(us, -2.0, 2.0) < 1e-6);
    }

    #[test]
    fn sign_of_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-3.0), -1.0);
        assert_eq!(sign(1e-300), 1.0);
    }

    #[test]
    fn generators_are_deterministic() {
        let toy = ToyExampleConfig {
            n: 50,
            seed: 4,
            include_u_in_features: true,
        };
        assert_eq!(gen_toy(&toy).unwrap(), gen_toy(&toy).unwrap());
        let e = ExpertiseConfig {
            n: 40,
            delta: 0.2,
            seed: 4,
        };
        assert_eq!(gen_expertise_pairs(&e).unwrap(), gen_expertise_pairs(&e).unwrap());
        assert_eq!(gen_validity_cube(30, 4).unwrap(), gen_validity_cube(30, 4).unwrap());
        assert_ne!(gen_validity_cube(30, 4).unwrap(), gen_validity_cube(30, 5).unwrap());
    }

    #[test]
    fn toy_feature_dimension() {
        let with_u = gen_toy(&ToyExampleConfig {
            n: 10,
            seed: 1,
            include_u_in_features: true,
        })
        .unwrap();
        let without = gen_toy(&ToyExampleConfig {
            n: 10,
            seed: 1,
            include_u_in_features: false,
        })
        .unwrap();
        assert_eq!(with_u.dim(), 2);
        assert_eq!(without.dim(), 1);
        // Same seed, same draws: only the recorded features differ.
        assert_eq!(with_u.outcomes(), without.outcomes());
        assert_eq!(with_u.x(3)[0], without.x(3)[0]);
    }

    #[test]
    fn perfect_expert_has_zero_loss() {
        let d = gen_expertise_pairs(&ExpertiseConfig {
            n: 100,
            delta: 0.5,
            seed: 3,
        })
        .unwrap();
        assert_eq!(dataset_loss(&d, LossSpec::ZeroOne).unwrap(), 0.0);
    }

    #[test]
    fn guessing_expert_has_half_loss() {
        let d = gen_expertise_pairs(&ExpertiseConfig {
            n: 10_000,
            delta: 0.0,
            seed: 3,
        })
        .unwrap();
        let loss = dataset_loss(&d, LossSpec::ZeroOne).unwrap();
        assert!((loss - 0.5).abs() <= 0.03, "loss {loss}");
    }

    #[test]
    fn expertise_layout() {
        let d = gen_expertise_pairs(&ExpertiseConfig {
            n: 6,
            delta: 0.1,
            seed: 0,
        })
        .unwrap();
        assert_eq!(d.outcomes(), vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let xs: Vec<f64> = d.observations().iter().map(|o| o.x[0]).collect();
        assert_eq!(xs, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(gen_expertise_pairs(&ExpertiseConfig {
            n: 7,
            delta: 0.1,
            seed: 0
        })
        .is_err());
        assert!(gen_expertise_pairs(&ExpertiseConfig {
            n: 8,
            delta: 0.6,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn expertise_pairs_always_match_exactly() {
        for seed in 0..5 {
            let d = gen_expertise_pairs(&ExpertiseConfig {
                n: 200,
                delta: 0.3,
                seed,
            })
            .unwrap();
            for pairs in [1, 25, 100] {
                let m = greedy_match(&d, pairs, &DistanceMetric::Euclidean).unwrap();
                assert_eq!(m.mismatch_count(), 0);
            }
        }
    }

    #[test]
    fn toy_latent_means_are_zero() {
        let n = 100_000;
        let d = gen_toy(&ToyExampleConfig {
            n,
            seed: 10,
            include_u_in_features: true,
        })
        .unwrap();
        let mean = |f: &dyn Fn(&Observation) -> f64| d.observations().iter().map(f).sum::<f64>() / n as f64;
        let sign = super::sign;
        let x = mean(&|o| o.x[0]);
        let u = mean(&|o| o.x[1]);
        let e1 = mean(&|o| o.y - o.x[0] - o.x[1]);
        let e2 = mean(&|o| o.y_hat - sign(o.x[0]) - sign(o.x[1]));
        let se = |var: f64| (var / n as f64).sqrt();
        assert!(x.abs() <= 3.0 * se(16.0 / 12.0), "x {x}");
        assert!(u.abs() <= 3.0 * se(4.0 / 12.0), "u {u}");
        assert!(e1.abs() <= 3.0 * se(1.0), "e1 {e1}");
        assert!(e2.abs() <= 3.0 * se(1.0), "e2 {e2}");
    }

    #[test]
    fn cube_outcome_variance() {
        let d = gen_validity_cube(100_000, 21).unwrap();
        let y = d.outcomes();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (y.len() - 1) as f64;
        // 3 · 100/12 + 1
        assert!((var / 26.0 - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn ols_identity_and_scaling() {
        let y = [1.0, -2.0, 3.5, 0.25, 7.0];
        let fit = ols_rescale(&y, &y).unwrap();
        assert!((fit.beta - 1.0).abs() < 1e-12 && fit.intercept.abs() < 1e-12 && fit.mse < 1e-24);
        let scaled: Vec<f64> = y.iter().map(|v| v / 100.0).collect();
        assert!(ols_rescale(&y, &scaled).unwrap().mse < 1e-20);
        assert!(matches!(ols_rescale(&y, &[2.0; 5]), Err(Error::DegenerateRegression)));
    }

    #[test]
    fn mse_comparison_validates() {
        assert!(mse_comparison(5, 10, 0).is_err());
        assert!(mse_comparison(100, 1, 0).is_err());
        let m = mse_comparison(200, 5, 0).unwrap();
        assert!(m.algorithm.mean < m.rescaled.mean && m.rescaled.mean < m.human.mean);
    }
}
