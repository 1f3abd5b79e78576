use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One record: features `x`, realized outcome `y` and expert forecast `y_hat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
    pub y_hat: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, y: f64, y_hat: f64) -> Self {
        Self { x, y, y_hat }
    }

    fn validate(&self, index: usize, dim: usize) -> Result<()> {
        if self.x.len() != dim {
            return Err(Error::InvalidDataset(format!(
                "record {index} has {} features, expected {dim}",
                self.x.len()
            )));
        }
        if let Some(k) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "record {index} feature {k} is not finite"
            )));
        }
        if !self.y.is_finite() || !self.y_hat.is_finite() {
            return Err(Error::InvalidDataset(format!(
                "record {index} has a non-finite outcome or prediction"
            )));
        }
        Ok(())
    }
}

/// An ordered collection of at least two observations sharing one feature dimension.
///
/// Construction validates every record; a `Dataset` never holds NaN or
/// infinite values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    observations: Vec<Observation>,
    dim: usize,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 records, got {}",
                observations.len()
            )));
        }
        let dim = observations[0].x.len();
        if dim == 0 {
            return Err(Error::InvalidDataset("feature dimension must be positive".into()));
        }
        for (i, obs) in observations.iter().enumerate() {
            obs.validate(i, dim)?;
        }
        Ok(Self { observations, dim })
    }

    /// Builds a dataset from parallel columns; `features` is row-major `n × d`.
    pub fn from_columns(features: &[f64], dim: usize, y: &[f64], y_hat: &[f64]) -> Result<Self> {
        let n = y.len();
        if y_hat.len() != n || dim == 0 || features.len() != n * dim {
            return Err(Error::InvalidDataset(format!(
                "column lengths disagree: features {} (d={dim}), y {}, y_hat {}",
                features.len(),
                n,
                y_hat.len()
            )));
        }
        let observations = features
            .chunks_exact(dim)
            .zip(y.iter().zip(y_hat))
            .map(|(x, (&y, &y_hat))| Observation::new(x.to_vec(), y, y_hat))
            .collect();
        Self::new(observations)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn get(&self, index: usize) -> &Observation {
        &self.observations[index]
    }

    pub fn x(&self, index: usize) -> &[f64] {
        &self.observations[index].x
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.y).collect()
    }

    pub fn predictions(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.y_hat).collect()
    }

    /// True when every outcome and prediction is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.observations
            .iter()
            .all(|o| is_binary_value(o.y) && is_binary_value(o.y_hat))
    }

    /// Same records with the predictions at `a` and `b` exchanged.
    pub(crate) fn swap_predictions(&mut self, a: usize, b: usize) {
        let tmp = self.observations[a].y_hat;
        self.observations[a].y_hat = self.observations[b].y_hat;
        self.observations[b].y_hat = tmp;
    }

    pub fn into_observations(self) -> Vec<Observation> {
        self.observations
    }
}

pub(crate) fn is_binary_value(v: f64) -> bool {
    v == 0.0 || v == 1.0
}
