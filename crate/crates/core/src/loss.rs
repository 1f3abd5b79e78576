use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{is_binary_value, Dataset};
use crate::error::{Error, Result};

/// Dataset-level loss `F(D)`, always normalized by the number of records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// Fraction of records with `y != y_hat`. Binary data only.
    ZeroOne,
    /// Mean of `(y - y_hat)^2`.
    SquaredError,
    /// `(fp_cost * #FP + fn_cost * #FN) / n`. Binary data only.
    WeightedBinary { fp_cost: f64, fn_cost: f64 },
}

impl LossSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::ZeroOne => "zero_one",
            LossSpec::SquaredError => "squared_error",
            LossSpec::WeightedBinary { .. } => "weighted_binary",
        }
    }

    pub fn is_binary(&self) -> bool {
        !matches!(self, LossSpec::SquaredError)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let LossSpec::WeightedBinary { fp_cost, fn_cost } = *self {
            if !(fp_cost.is_finite() && fn_cost.is_finite() && fp_cost >= 0.0 && fn_cost >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "weighted loss costs must be finite and nonnegative, got fp={fp_cost}, fn={fn_cost}"
                )));
            }
        }
        Ok(())
    }

    /// Checks that every `(y, y_hat)` pair is in this loss's domain.
    pub fn check_domain(&self, y: &[f64], y_hat: &[f64]) -> Result<()> {
        self.validate()?;
        if self.is_binary() {
            if let Some(index) = y
                .iter()
                .zip(y_hat)
                .position(|(&a, &b)| !(is_binary_value(a) && is_binary_value(b)))
            {
                return Err(Error::IncompatibleLoss {
                    loss: self.name(),
                    index,
                    y: y[index],
                    y_hat: y_hat[index],
                });
            }
        }
        Ok(())
    }

    /// Mean loss over aligned slices, assuming [`check_domain`](Self::check_domain) passed.
    ///
    /// Binary losses are accumulated as integer counts before scaling, so two
    /// inputs with equal mistake counts produce bit-identical values.
    pub(crate) fn evaluate_unchecked(&self, y: &[f64], y_hat: &[f64]) -> f64 {
        let n = y.len() as f64;
        match *self {
            LossSpec::SquaredError => {
                // Summing in sorted order makes the result independent of record order.
                let mut terms: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).collect();
                terms.sort_unstable_by(f64::total_cmp);
                terms.iter().sum::<f64>() / n
            }
            LossSpec::ZeroOne => y.iter().zip(y_hat).filter(|(a, b)| a != b).count() as f64 / n,
            LossSpec::WeightedBinary { fp_cost, fn_cost } => {
                let (mut fp, mut fneg) = (0u64, 0u64);
                for (&a, &b) in y.iter().zip(y_hat) {
                    if a == 0.0 && b == 1.0 {
                        fp += 1;
                    } else if a == 1.0 && b == 0.0 {
                        fneg += 1;
                    }
                }
                (fp_cost * fp as f64 + fn_cost * fneg as f64) / n
            }
        }
    }

    pub fn evaluate(&self, y: &[f64], y_hat: &[f64]) -> Result<f64> {
        if y.len() != y_hat.len() || y.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "loss needs equal nonempty columns, got {} and {}",
                y.len(),
                y_hat.len()
            )));
        }
        self.check_domain(y, y_hat)?;
        Ok(self.evaluate_unchecked(y, y_hat))
    }
}

/// Mean per-record loss of a whole dataset.
pub fn dataset_loss(d: &Dataset, loss: LossSpec) -> Result<f64> {
    loss.evaluate(&d.outcomes(), &d.predictions())
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossSpec::ZeroOne => write!(f, "zero-one"),
            LossSpec::SquaredError => write!(f, "squared"),
            LossSpec::WeightedBinary { fp_cost, fn_cost } => {
                write!(f, "weighted:fp={fp_cost},fn={fn_cost}")
            }
        }
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    /// Parses `zero-one`, `squared` or `weighted:fp=<r>,fn=<r>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unrecognized loss `{s}`"));
        match s {
            "zero-one" | "zero_one" => return Ok(LossSpec::ZeroOne),
            "squared" | "squared_error" => return Ok(LossSpec::SquaredError),
            _ => {}
        }
        let rest = s.strip_prefix("weighted:").ok_or_else(bad)?;
        let (mut fp_cost, mut fn_cost) = (None, None);
        for part in rest.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            let value: f64 = value.trim().parse().map_err(|_| bad())?;
            match key.trim() {
                "fp" => fp_cost = Some(value),
                "fn" => fn_cost = Some(value),
                _ => return Err(bad()),
            }
        }
        let spec = LossSpec::WeightedBinary {
            fp_cost: fp_cost.ok_or_else(bad)?,
            fn_cost: fn_cost.ok_or_else(bad)?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Observation;
    use proptest::prelude::*;

    fn binary(y: &[f64], y_hat: &[f64]) -> Dataset {
        let obs = y
            .iter()
            .zip(y_hat)
            .enumerate()
            .map(|(i, (&a, &b))| Observation::new(vec![i as f64], a, b))
            .collect();
        Dataset::new(obs).unwrap()
    }

    #[test]
    fn zero_one_perfect() {
        let d = binary(&[0.0, 1.0, 0.0, 1.0], &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(dataset_loss(&d, LossSpec::ZeroOne).unwrap(), 0.0);
    }

    #[test]
    fn zero_one_half_wrong() {
        let d = binary(&[0.0, 1.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(dataset_loss(&d, LossSpec::ZeroOne).unwrap(), 0.5);
    }

    #[test]
    fn squared_error_mean() {
        let d = binary(&[1.0, 3.0], &[2.0, 3.0]);
        assert_eq!(dataset_loss(&d, LossSpec::SquaredError).unwrap(), 0.5);
    }

    #[test]
    fn weighted_counts_fp_and_fn() {
        // one FP (y=0, y_hat=1) and one FN (y=1, y_hat=0)
        let d = binary(&[0.0, 1.0, 1.0, 0.0], &[1.0, 0.0, 1.0, 0.0]);
        let loss = LossSpec::WeightedBinary {
            fp_cost: 1.0,
            fn_cost: 5.0,
        };
        assert_eq!(dataset_loss(&d, loss).unwrap(), 6.0 / 4.0);
    }

    #[test]
    fn binary_loss_rejects_real_values() {
        let d = binary(&[0.0, 0.5], &[0.0, 1.0]);
        let err = dataset_loss(&d, LossSpec::ZeroOne).unwrap_err();
        assert!(matches!(err, Error::IncompatibleLoss { index: 1, .. }));
        let w = LossSpec::WeightedBinary {
            fp_cost: 1.0,
            fn_cost: 1.0,
        };
        assert!(matches!(dataset_loss(&d, w), Err(Error::IncompatibleLoss { .. })));
        assert!(dataset_loss(&d, LossSpec::SquaredError).is_ok());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["zero-one", "squared", "weighted:fp=1,fn=5"] {
            let spec: LossSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("weighted:fp=-1,fn=2".parse::<LossSpec>().is_err());
        assert!("weighted:fp=1".parse::<LossSpec>().is_err());
        assert!("hinge".parse::<LossSpec>().is_err());
    }

    fn arb_loss() -> impl Strategy<Value = LossSpec> {
        prop_oneof![
            Just(LossSpec::ZeroOne),
            Just(LossSpec::SquaredError),
            (0.0..10.0f64, 0.0..10.0f64).prop_map(|(fp_cost, fn_cost)| LossSpec::WeightedBinary { fp_cost, fn_cost }),
        ]
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            rows in prop::collection::vec((0u8..2, 0u8..2), 2..40),
            loss in arb_loss(),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let y: Vec<f64> = rows.iter().map(|r| f64::from(r.0)).collect();
            let y_hat: Vec<f64> = rows.iter().map(|r| f64::from(r.1)).collect();
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let py: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let ph: Vec<f64> = idx.iter().map(|&i| y_hat[i]).collect();
            prop_assert_eq!(loss.evaluate(&y, &y_hat).unwrap(), loss.evaluate(&py, &ph).unwrap());
        }

        #[test]
        fn squared_error_permutation_invariant_on_reals(
            rows in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 2..60),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut perm = rows.clone();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |r: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { r.iter().copied().unzip() };
            let (y, h) = split(&rows);
            let (py, ph) = split(&perm);
            let loss = LossSpec::SquaredError;
            prop_assert_eq!(loss.evaluate(&y, &h).unwrap(), loss.evaluate(&py, &ph).unwrap());
        }
    }
}
