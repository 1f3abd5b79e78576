//! Multi-`L` audit reports: a table for people, JSON for machines.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bounds::{validity_bound, ValidityBound};
use crate::dataset::Dataset;
use crate::engine::{expert_test_with_matching, TestConfig};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::matching::greedy_match;
use crate::metric::DistanceMetric;

/// Configuration shared by every row of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub n: usize,
    pub dim: usize,
    pub pairs: Vec<usize>,
    pub resamples: usize,
    pub alpha: f64,
    pub loss: LossSpec,
    pub metric: DistanceMetric,
    pub seed: u64,
    pub smoothness_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub pairs: usize,
    pub mismatched_pairs: usize,
    /// Swap classes are only defined for binary data.
    pub swaps_increase: Option<usize>,
    pub swaps_decrease: Option<usize>,
    pub swaps_neutral: Option<usize>,
    pub tau: f64,
    pub effective_p: f64,
    pub rejected: bool,
    pub observed_loss: f64,
    pub epsilon_note: String,
    pub validity: Option<ValidityBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: ReportConfig,
    pub rows: Vec<ReportRow>,
}

/// `τ` as printed: `<1/(K+1)` when no resample beat the observed loss.
pub fn format_tau(tau: f64, resamples: usize) -> String {
    if (tau * resamples as f64).round() == 0.0 {
        format!("<1/{}", resamples + 1)
    } else {
        format!("{tau:.3}")
    }
}

fn epsilon_note(mismatched: usize, validity: Option<&ValidityBound>) -> String {
    match (mismatched, validity) {
        (0, _) => "ε* = 0 (all pairs exact)".to_string(),
        (_, Some(v)) => format!("ε* = {:.4}", v.epsilon_star),
        (_, None) => "ε* unknown (supply --smoothness-C)".to_string(),
    }
}

/// Runs the test once per `L`, reusing one greedy matching computed at the largest `L`.
///
/// `base.pairs` is ignored.
pub fn run_report(d: &Dataset, pair_counts: &[usize], base: &TestConfig, smoothness: Option<f64>) -> Result<Report> {
    let max_pairs = *pair_counts
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidConfig("at least one pair count is required".into()))?;
    if max_pairs > d.len() / 2 {
        return Err(Error::TooManyPairs {
            requested: max_pairs,
            max: d.len() / 2,
        });
    }
    if let Some(c) = smoothness {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothness constant must be finite and nonnegative, got {c}"
            )));
        }
    }
    TestConfig {
        pairs: max_pairs,
        ..base.clone()
    }
    .validate()?;
    if base.loss.is_binary() {
        base.loss.check_domain(&d.outcomes(), &d.predictions())?;
    }

    let matching = greedy_match(d, max_pairs, &base.metric)?;
    let rows = pair_counts
        .iter()
        .map(|&pairs| {
            let cfg = TestConfig { pairs, ..base.clone() };
            let result = expert_test_with_matching(d, &matching, &cfg)?;
            let validity = smoothness
                .map(|c| validity_bound(d, &matching.prefix(pairs), c, cfg.alpha, cfg.resamples))
                .transpose()?;
            let swaps = result.binary_swap_counts;
            Ok(ReportRow {
                pairs,
                mismatched_pairs: result.mismatch_count,
                swaps_increase: swaps.map(|s| s.increase),
                swaps_decrease: swaps.map(|s| s.decrease),
                swaps_neutral: swaps.map(|s| s.neutral),
                tau: result.tau,
                effective_p: result.effective_p,
                rejected: result.rejected,
                observed_loss: result.observed_loss,
                epsilon_note: epsilon_note(result.mismatch_count, validity.as_ref()),
                validity,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Report {
        config: ReportConfig {
            n: d.len(),
            dim: d.dim(),
            pairs: pair_counts.to_vec(),
            resamples: base.resamples,
            alpha: base.alpha,
            loss: base.loss,
            metric: base.metric.clone(),
            seed: base.master_seed,
            smoothness_c: smoothness,
        },
        rows,
    })
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn render_table(&self) -> String {
        let k = self.config.resamples;
        let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |c| c.to_string());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "n={} d={} K={} alpha={} loss={} metric={} seed={}",
            self.config.n,
            self.config.dim,
            k,
            self.config.alpha,
            self.config.loss,
            self.config.metric,
            self.config.seed
        );
        let _ = writeln!(
            out,
            "{:>7} {:>10} {:>9} {:>9} {:>9} {:>10}  note",
            "L", "mismatched", "increase", "decrease", "tau", "reject"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>7} {:>10} {:>9} {:>9} {:>9} {:>10}  {}",
                r.pairs,
                r.mismatched_pairs,
                opt(r.swaps_increase),
                opt(r.swaps_decrease),
                format_tau(r.tau, k),
                if r.rejected { "yes" } else { "no" },
                r.epsilon_note
            );
            if let Some(v) = &r.validity {
                let _ = writeln!(
                    out,
                    "{:>7} type-I bound {:.4} (union {:.4}), adjusted alpha {:.4}",
                    "", v.tight_bound, v.union_bound, v.adjusted_threshold
                );
            }
        }
        out
    }
}
