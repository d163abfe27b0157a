//! Min-max normalization fitted on the training partition.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::store::decimal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub name: String,
    #[serde(with = "decimal")]
    pub min: f64,
    #[serde(with = "decimal")]
    pub max: f64,
}

impl FeatureRange {
    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub features: Vec<FeatureRange>,
}

impl MinMaxScaler {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidDataset("cannot fit scaler on empty dataset".into()));
        }
        let features = train
            .schema()
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let (min, max) = train
                    .samples()
                    .iter()
                    .map(|s| s.features[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                FeatureRange { name: name.clone(), min, max }
            })
            .collect();
        Ok(Self { features })
    }

    pub fn schema(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn degenerate_features(&self) -> Vec<&str> {
        self.features.iter().filter(|f| f.is_degenerate()).map(|f| f.name.as_str()).collect()
    }

    /// Scales one row. Values outside the fitted range saturate at 0 or 1;
    /// degenerate features map to 0.
    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.features.len() {
            return Err(Error::DimensionMismatch { expected: self.features.len(), found: row.len() });
        }
        Ok(row
            .iter()
            .zip(&self.features)
            .map(|(&x, r)| {
                if r.is_degenerate() {
                    0.0
                } else {
                    ((x - r.min) / (r.max - r.min)).clamp(0.0, 1.0)
                }
            })
            .collect())
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        ds.ensure_schema(&self.schema())?;
        let rows = ds
            .samples()
            .iter()
            .map(|s| self.transform_row(&s.features))
            .collect::<Result<Vec<_>>>()?;
        ds.with_features(ds.schema().to_vec(), rows)
    }

    pub fn inverse_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.features.len() {
            return Err(Error::DimensionMismatch { expected: self.features.len(), found: row.len() });
        }
        row.iter()
            .zip(&self.features)
            .map(|(&v, r)| {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange { feature: r.name.clone(), value: v });
                }
                Ok(v * (r.max - r.min) + r.min)
            })
            .collect()
    }

    pub fn inverse_transform(&self, ds: &Dataset) -> Result<Dataset> {
        ds.ensure_schema(&self.schema())?;
        let rows = ds
            .samples()
            .iter()
            .map(|s| self.inverse_row(&s.features))
            .collect::<Result<Vec<_>>>()?;
        ds.with_features(ds.schema().to_vec(), rows)
    }
}
