use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance used to pair feature vectors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    /// `sqrt(sum_k w_k (x_k - x'_k)^2)`; zero weights drop a feature.
    WeightedEuclidean { weights: Vec<f64> },
}

impl DistanceMetric {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let DistanceMetric::WeightedEuclidean { weights } = self {
            if weights.len() != dim {
                return Err(Error::InvalidConfig(format!(
                    "metric has {} weights but data has {dim} features",
                    weights.len()
                )));
            }
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidConfig(
                    "metric weights must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let sq = match self {
            DistanceMetric::Euclidean => a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>(),
            DistanceMetric::WeightedEuclidean { weights } => a
                .iter()
                .zip(b)
                .zip(weights)
                .map(|((p, q), w)| w * (p - q) * (p - q))
                .sum::<f64>(),
        };
        sq.sqrt()
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceMetric::Euclidean => write!(f, "l2"),
            DistanceMetric::WeightedEuclidean { weights } => {
                let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                write!(f, "weighted:{}", w.join(","))
            }
        }
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    /// Parses `l2` or `weighted:<w1,...,wd>`.
    fn from_str(s: &str) -> Result<Self> {
        if matches!(s, "l2" | "euclidean") {
            return Ok(DistanceMetric::Euclidean);
        }
        let bad = || Error::InvalidConfig(format!("unrecognized metric `{s}`"));
        let rest = s.strip_prefix("weighted:").ok_or_else(bad)?;
        let weights = rest
            .split(',')
            .map(|w| w.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let metric = DistanceMetric::WeightedEuclidean { weights };
        metric.validate(rest.split(',').count())?;
        Ok(metric)
    }
}
