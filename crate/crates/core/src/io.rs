//! CSV ingestion and emission.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Observation};
use crate::error::{Error, Result};

/// Which input columns hold features, outcome and prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub feature_columns: Vec<String>,
    pub outcome_column: String,
    pub prediction_column: String,
}

impl ColumnSpec {
    pub fn new(features: &[&str], outcome: &str, prediction: &str) -> Self {
        Self {
            feature_columns: features.iter().map(|s| s.to_string()).collect(),
            outcome_column: outcome.to_string(),
            prediction_column: prediction.to_string(),
        }
    }

    /// Default names used when writing a dataset: `f1..fd, y, y_hat`.
    pub fn default_for(dim: usize) -> Self {
        Self {
            feature_columns: (1..=dim).map(|k| format!("f{k}")).collect(),
            outcome_column: "y".into(),
            prediction_column: "y_hat".into(),
        }
    }

    fn all(&self) -> impl Iterator<Item = &String> {
        self.feature_columns
            .iter()
            .chain([&self.outcome_column, &self.prediction_column])
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::InvalidConfig("at least one feature column is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in self.all() {
            if !seen.insert(name) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        Ok(())
    }
}

pub fn load_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<Dataset> {
    read_csv(File::open(path)?, spec)
}

/// Reads a headed CSV, keeping row order. Blank or non-numeric cells are errors.
pub fn read_csv<R: Read>(input: R, spec: &ColumnSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    if header.is_empty() {
        return Err(Error::EmptyFile);
    }
    let locate = |name: &String| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))
    };
    let feature_idx = spec.feature_columns.iter().map(locate).collect::<Result<Vec<_>>>()?;
    let outcome_idx = locate(&spec.outcome_column)?;
    let prediction_idx = locate(&spec.prediction_column)?;

    let mut observations = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            match raw.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::NonNumericCell {
                    row: row + 1,
                    column: name.to_string(),
                    value: raw.to_string(),
                }),
            }
        };
        let x = feature_idx
            .iter()
            .zip(&spec.feature_columns)
            .map(|(&i, name)| cell(i, name))
            .collect::<Result<Vec<_>>>()?;
        let y = cell(outcome_idx, &spec.outcome_column)?;
        let y_hat = cell(prediction_idx, &spec.prediction_column)?;
        observations.push(Observation::new(x, y, y_hat));
    }
    if observations.is_empty() {
        return Err(Error::EmptyFile);
    }
    Dataset::new(observations)
}

/// Writes a dataset with a header; values use shortest round-trip formatting.
pub fn write_csv<W: Write>(d: &Dataset, spec: &ColumnSpec, output: W) -> Result<()> {
    spec.validate()?;
    if spec.feature_columns.len() != d.dim() {
        return Err(Error::InvalidConfig(format!(
            "{} feature names for {} features",
            spec.feature_columns.len(),
            d.dim()
        )));
    }
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(spec.all())?;
    for o in d.observations() {
        let row = o.x.iter().chain([&o.y, &o.y_hat]).map(|v| v.to_string());
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Serializes any table of rows as CSV plot data.
pub fn write_rows_csv<T: Serialize, W: Write>(rows: &[T], output: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(output);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Min-max scales each feature column to `[0, 1]`; constant columns become 0.
pub fn normalize_features(d: &Dataset) -> Dataset {
    let dim = d.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for o in d.observations() {
        for (k, &v) in o.x.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let observations = d
        .observations()
        .iter()
        .map(|o| {
            let x =
                o.x.iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let range = hi[k] - lo[k];
                        if range > 0.0 {
                            ((v - lo[k]) / range).clamp(0.0, 1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
            Observation::new(x, o.y, o.y_hat)
        })
        .collect();
    Dataset::new(observations).expect("scaling preserves shape and finiteness")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec2() -> ColumnSpec {
        ColumnSpec::new(&["f1", "f2"], "y", "yhat")
    }

    #[test]
    fn loads_three_rows() {
        let csv = "f1,f2,y,yhat\n1,2,0,1\n3,4,1,1\n5,6,0,0\n";
        let d = read_csv(csv.as_bytes(), &spec2()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.x(2), &[5.0, 6.0]);
        assert_eq!(d.predictions(), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn column_order_and_extra_columns() {
        let csv = "id,yhat,\"f2\",y,f1\n7,1,20,0,10\n8,0,40,1,30\n";
        let d = read_csv(csv.as_bytes(), &spec2()).unwrap();
        assert_eq!(d.x(0), &[10.0, 20.0]);
        assert_eq!(d.outcomes(), vec![0.0, 1.0]);
    }

    #[test]
    fn blank_cell_is_an_error() {
        let csv = "f1,f2,y,yhat\n1,,0,1\n3,4,1,1\n";
        match read_csv(csv.as_bytes(), &spec2()) {
            Err(Error::NonNumericCell { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "f2");
            }
            other => panic!("expected NonNumericCell, got {other:?}"),
        }
    }

    #[test]
    fn nan_cell_is_an_error() {
        let csv = "f1,f2,y,yhat\n1,2,0,1\n3,NaN,1,1\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &spec2()),
            Err(Error::NonNumericCell { row: 2, .. })
        ));
    }

    #[test]
    fn missing_column_and_empty_file() {
        let csv = "f1,y,yhat\n1,0,1\n2,1,1\n";
        assert!(matches!(read_csv(csv.as_bytes(), &spec2()), Err(Error::MissingColumn(c)) if c == "f2"));
        assert!(matches!(
            read_csv("f1,f2,y,yhat\n".as_bytes(), &spec2()),
            Err(Error::EmptyFile)
        ));
        assert!(matches!(read_csv("".as_bytes(), &spec2()), Err(Error::EmptyFile)));
    }

    #[test]
    fn overlapping_roles_rejected() {
        let spec = ColumnSpec::new(&["f1", "y"], "y", "yhat");
        assert!(matches!(spec.validate(), Err(Error::DuplicateColumn(_))));
    }

    #[test]
    fn normalize_examples() {
        let d = Dataset::new(vec![
            Observation::new(vec![2.0, 5.0, 0.0], 0.0, 0.0),
            Observation::new(vec![4.0, 5.0, 1.0], 0.0, 0.0),
            Observation::new(vec![6.0, 5.0, 0.25], 0.0, 0.0),
        ])
        .unwrap();
        let n = normalize_features(&d);
        let col = |k: usize| n.observations().iter().map(|o| o.x[k]).collect::<Vec<_>>();
        assert_eq!(col(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(col(1), vec![0.0, 0.0, 0.0]);
        assert_eq!(col(2), vec![0.0, 1.0, 0.25]);
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec(
            (prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), -1e9..1e9f64, -1e9..1e9f64),
            2..30,
        )) {
            let obs = rows.into_iter().map(|(x, y, h)| Observation::new(x, y, h)).collect();
            let d = Dataset::new(obs).unwrap();
            let spec = ColumnSpec::default_for(3);
            let mut buf = Vec::new();
            write_csv(&d, &spec, &mut buf).unwrap();
            prop_assert_eq!(read_csv(buf.as_slice(), &spec).unwrap(), d);
        }

        #[test]
        fn normalization_idempotent(cols in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 2), 2..30)) {
            let d = Dataset::new(cols.into_iter().map(|x| Observation::new(x, 0.0, 0.0)).collect()).unwrap();
            let once = normalize_features(&d);
            prop_assert_eq!(normalize_features(&once), once);
        }
    }
}
