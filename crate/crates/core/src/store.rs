//! Versioned JSON model bundle.
//!
//! Every real number is written as decimal text with 17 significant digits,
//! which round-trips an `f64` exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cart::CartModel;
use crate::data::{select_features, Dataset, SplitMethod};
use crate::ensemble::{Classifier, EnsembleModel, TiePolicy};
use crate::error::{Error, Result};
use crate::kmeans::{attach_cluster_feature, KMeansModel, CLUSTER_FEATURE};
use crate::logistic::LogisticModel;
use crate::scaler::MinMaxScaler;

pub const FORMAT_VERSION: u32 = 1;

/// Serde adapter: `f64` as a decimal string.
pub mod decimal {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn format(v: f64) -> String {
        format!("{v:.16e}")
    }

    pub fn parse(s: &str) -> Result<f64, String> {
        let v: f64 = s.parse().map_err(|_| format!("invalid decimal {s:?}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite decimal {s:?}"))
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(D::Error::custom)
    }

    pub mod matrix {
        use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
            let text: Vec<Vec<String>> =
                m.iter().map(|r| r.iter().map(|v| super::format(*v)).collect()).collect();
            text.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
            let text = Vec::<Vec<String>>::deserialize(d)?;
            text.iter()
                .map(|r| r.iter().map(|v| super::parse(v).map_err(D::Error::custom)).collect())
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub train_count: usize,
    pub split_method: SplitMethod,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    /// Raw feature schema expected in input files.
    pub input_schema: Vec<String>,
    /// Features kept after correlation pruning.
    pub selected_features: Vec<String>,
    /// Model input schema: the selected features, plus `cluster` when the
    /// cluster attribute is enabled.
    pub schema: Vec<String>,
    pub scaler: Option<MinMaxScaler>,
    pub kmeans: Option<KMeansModel>,
    pub cart: CartModel,
    pub logistic: LogisticModel,
    pub tie_policy: TiePolicy,
    pub provenance: Provenance,
}

impl ModelBundle {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::UnknownVersion(self.format_version));
        }
        let mismatch = |what: &str, expected: &[String], found: &[String]| {
            Error::MalformedBundle(format!(
                "{what} schema {found:?} inconsistent with {expected:?}"
            ))
        };
        if let Some(s) = &self.scaler {
            if s.schema() != self.input_schema {
                return Err(mismatch("scaler", &self.input_schema, &s.schema()));
            }
        }
        if let Some(f) = self.selected_features.iter().find(|f| !self.input_schema.contains(f)) {
            return Err(Error::MalformedBundle(format!("selected feature {f:?} not in input schema")));
        }
        let mut expected = self.selected_features.clone();
        if let Some(k) = &self.kmeans {
            if k.features != self.selected_features {
                return Err(mismatch("kmeans", &self.selected_features, &k.features));
            }
            if k.centroids.len() != k.k || k.centroids.iter().any(|c| c.len() != k.features.len()) {
                return Err(Error::MalformedBundle("kmeans centroid shape".into()));
            }
            expected.push(CLUSTER_FEATURE.to_string());
        }
        if self.schema != expected {
            return Err(mismatch("model", &expected, &self.schema));
        }
        if self.cart.schema != self.schema {
            return Err(mismatch("cart", &self.schema, &self.cart.schema));
        }
        if self.logistic.schema != self.schema {
            return Err(mismatch("logistic", &self.schema, &self.logistic.schema));
        }
        Ok(())
    }

    /// Raw dataset → model-ready dataset (scale, project, cluster attribute).
    pub fn prepare(&self, raw: &Dataset) -> Result<Dataset> {
        raw.ensure_schema(&self.input_schema)?;
        let scaled = match &self.scaler {
            Some(s) => s.transform(raw)?,
            None => raw.clone(),
        };
        let selected = select_features(&scaled, &self.selected_features)?;
        match &self.kmeans {
            Some(k) => attach_cluster_feature(&selected, k),
            None => Ok(selected),
        }
    }

    pub fn ensemble(&self) -> Result<EnsembleModel<'_>> {
        EnsembleModel::new(vec![&self.cart as &dyn Classifier, &self.logistic], self.tie_policy)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        save_bundle(self, &mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }
}

pub fn save_bundle<W: Write>(b: &ModelBundle, mut sink: W) -> Result<()> {
    b.validate()?;
    serde_json::to_writer_pretty(&mut sink, b)
        .map_err(|e| Error::MalformedBundle(e.to_string()))?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn load_bundle<R: Read>(mut source: R) -> Result<ModelBundle> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        Error::MalformedBundle(format!("parse error at line {} column {}: {e}", e.line(), e.column()))
    })?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => return Err(Error::UnknownVersion(v.try_into().unwrap_or(u32::MAX))),
        None => return Err(Error::MalformedBundle("missing format_version".into())),
    }
    let bundle: ModelBundle =
        serde_json::from_value(value).map_err(|e| Error::MalformedBundle(e.to_string()))?;
    bundle.validate()?;
    Ok(bundle)
}

pub fn save_bundle_path(b: &ModelBundle, path: impl AsRef<std::path::Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    save_bundle(b, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_bundle_path(path: impl AsRef<std::path::Path>) -> Result<ModelBundle> {
    load_bundle(std::fs::File::open(path)?)
}
