//! Dataset schema, WDBC ingestion, feature projection and seeded splitting.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ten mean cytology features, in source column order.
pub const WDBC_MEAN_FEATURES: [&str; 10] = [
    "radius",
    "texture",
    "perimeter",
    "area",
    "smoothness",
    "compactness",
    "concavity",
    "concave_points",
    "symmetry",
    "fdimension",
];

const WDBC_FIELDS: usize = 32;

/// A = abnormal (malignant), N = normal (benign).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Diagnosis {
    A,
    N,
}

impl Diagnosis {
    pub const ALL: [Diagnosis; 2] = [Diagnosis::A, Diagnosis::N];

    /// Maps the UCI source code (`M` / `B`).
    pub fn from_source_code(code: &str) -> Option<Self> {
        match code {
            "M" => Some(Diagnosis::A),
            "B" => Some(Diagnosis::N),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Diagnosis::A => 0,
            Diagnosis::N => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Diagnosis::A => "A",
            Diagnosis::N => "N",
        }
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Diagnosis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Diagnosis::A),
            "N" => Ok(Diagnosis::N),
            other => Err(Error::InvalidArgument(format!("unknown diagnosis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub diagnosis: Diagnosis,
    pub features: Vec<f64>,
}

/// An ordered, validated collection of samples sharing one feature schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<String>,
    samples: Vec<Sample>,
}

impl Dataset {
    /// Validates width, finiteness and id uniqueness.
    pub fn new(schema: Vec<String>, samples: Vec<Sample>) -> Result<Self> {
        let ds = Self::new_allow_empty(schema, samples)?;
        if ds.samples.is_empty() {
            return Err(Error::InvalidDataset("no samples".into()));
        }
        Ok(ds)
    }

    // Split partitions and projections of valid datasets reuse this; callers
    // that need a nonempty dataset go through `new`.
    fn new_allow_empty(schema: Vec<String>, samples: Vec<Sample>) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::InvalidDataset("empty schema".into()));
        }
        check_unique_names(&schema)?;
        let mut ids = HashSet::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != schema.len() {
                return Err(Error::InvalidDataset(format!(
                    "sample {:?} has {} features, schema has {}",
                    s.id,
                    s.features.len(),
                    schema.len()
                )));
            }
            if let Some(v) = s.features.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("sample {:?} value {v}", s.id)));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::DuplicateId { record: i + 1, id: s.id.clone() });
            }
        }
        Ok(Self { schema, samples })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn width(&self) -> usize {
        self.schema.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|n| n == name)
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.features[j]).collect()
    }

    pub fn labels(&self) -> Vec<Diagnosis> {
        self.samples.iter().map(|s| s.diagnosis).collect()
    }

    pub fn class_count(&self, d: Diagnosis) -> usize {
        self.samples.iter().filter(|s| s.diagnosis == d).count()
    }

    /// Rebuilds a dataset with the same ids and labels but new feature rows.
    pub(crate) fn with_features(&self, schema: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .zip(rows)
            .map(|(s, features)| Sample { id: s.id.clone(), diagnosis: s.diagnosis, features })
            .collect();
        Self::new_allow_empty(schema, samples)
    }

    pub fn ensure_schema(&self, expected: &[String]) -> Result<()> {
        if self.schema != expected {
            return Err(Error::SchemaMismatch {
                expected: expected.to_vec(),
                found: self.schema.clone(),
            });
        }
        Ok(())
    }
}

fn check_unique_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::DuplicateFeature(n.clone()));
        }
    }
    Ok(())
}

/// Parses UCI `wdbc.data` records, keeping only the ten mean features.
///
/// Each line holds `id,diagnosis,f1..f30`. Blank lines are skipped; LF and
/// CRLF terminators are both accepted. Record numbers in errors are 1-based
/// line numbers.
pub fn load_wdbc<R: BufRead>(source: R) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut ids = HashSet::new();
    for (lineno, line) in source.lines().enumerate() {
        let record = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != WDBC_FIELDS {
            return Err(Error::record(
                record,
                format!("expected {WDBC_FIELDS} fields, found {}", fields.len()),
            ));
        }
        let id = fields[0].to_string();
        if id.is_empty() {
            return Err(Error::record(record, "empty id"));
        }
        let diagnosis = Diagnosis::from_source_code(fields[1]).ok_or_else(|| {
            Error::record(record, format!("unknown diagnosis code {:?}", fields[1]))
        })?;
        let mut features = Vec::with_capacity(WDBC_MEAN_FEATURES.len());
        for (k, raw) in fields.iter().enumerate().skip(2) {
            let v: f64 = raw.parse().map_err(|_| {
                Error::record(record, format!("field {}: unparsable real {raw:?}", k + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::record(record, format!("field {}: non-finite value", k + 1)));
            }
            if k < 2 + WDBC_MEAN_FEATURES.len() {
                features.push(v);
            }
        }
        if !ids.insert(id.clone()) {
            return Err(Error::DuplicateId { record, id });
        }
        samples.push(Sample { id, diagnosis, features });
    }
    if samples.is_empty() {
        return Err(Error::EmptySource);
    }
    Dataset::new(WDBC_MEAN_FEATURES.iter().map(|s| s.to_string()).collect(), samples)
}

pub fn load_wdbc_path(path: impl AsRef<std::path::Path>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    load_wdbc(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    Stratified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub method: SplitMethod,
}

/// Per-class training quotas: `round(train_count * share)`, then nudged by
/// one sample at a time (largest fractional remainder first) until they sum
/// to `train_count`.
fn class_quotas(class_sizes: [usize; 2], train_count: usize) -> [usize; 2] {
    let total: usize = class_sizes.iter().sum();
    let exact: Vec<f64> = class_sizes
        .iter()
        .map(|&c| train_count as f64 * c as f64 / total as f64)
        .collect();
    let mut quota = [0usize; 2];
    for i in 0..2 {
        quota[i] = (exact[i].round() as usize).min(class_sizes[i]);
    }
    loop {
        let sum: usize = quota.iter().sum();
        if sum == train_count {
            break;
        }
        let remainder = |i: usize| exact[i] - quota[i] as f64;
        if sum < train_count {
            // Class A wins ties (index order).
            let i = (0..2)
                .filter(|&i| quota[i] < class_sizes[i])
                .max_by(|&a, &b| remainder(a).total_cmp(&remainder(b)).then(b.cmp(&a)))
                .expect("train_count < total guarantees room");
            quota[i] += 1;
        } else {
            let i = (0..2)
                .filter(|&i| quota[i] > 0)
                .min_by(|&a, &b| remainder(a).total_cmp(&remainder(b)).then(a.cmp(&b)))
                .expect("train_count > 0 guarantees a positive quota");
            quota[i] -= 1;
        }
    }
    quota
}

/// Stratified-by-diagnosis split. Membership depends only on the sample
/// order, labels, `train_count` and `seed`; both partitions keep source order.
pub fn train_test_split(ds: &Dataset, train_count: usize, seed: u64) -> Result<DataSplit> {
    if train_count == 0 || train_count >= ds.len() {
        return Err(Error::InvalidArgument(format!(
            "train_count {train_count} must lie in 1..{}",
            ds.len()
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, s) in ds.samples().iter().enumerate() {
        by_class[s.diagnosis.index()].push(i);
    }
    for d in Diagnosis::ALL {
        if by_class[d.index()].is_empty() {
            return Err(Error::MissingClass(d.as_str()));
        }
    }
    let quota = class_quotas([by_class[0].len(), by_class[1].len()], train_count);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; ds.len()];
    for (members, &q) in by_class.iter_mut().zip(quota.iter()) {
        members.shuffle(&mut rng);
        for &i in &members[..q] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = ds
        .samples()
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    let strip = |v: Vec<(Sample, bool)>| v.into_iter().map(|(s, _)| s).collect::<Vec<_>>();
    Ok(DataSplit {
        train: Dataset::new(ds.schema().to_vec(), strip(train))?,
        test: Dataset::new(ds.schema().to_vec(), strip(test))?,
        seed,
        method: SplitMethod::Stratified,
    })
}

/// Projects onto `keep`, in the order given.
pub fn select_features<S: AsRef<str>>(ds: &Dataset, keep: &[S]) -> Result<Dataset> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("empty feature selection".into()));
    }
    let names: Vec<String> = keep.iter().map(|s| s.as_ref().to_string()).collect();
    check_unique_names(&names)?;
    let idx = names
        .iter()
        .map(|n| ds.feature_index(n).ok_or_else(|| Error::UnknownFeature(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    let rows = ds
        .samples()
        .iter()
        .map(|s| idx.iter().map(|&j| s.features[j]).collect())
        .collect();
    ds.with_features(names, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, code: &str, base: f64) -> String {
        let mut fields = vec![id.to_string(), code.to_string()];
        for k in 0..30 {
            fields.push(format!("{}", base + k as f64 * 0.5));
        }
        fields.join(",")
    }

    #[test]
    fn parses_two_records() {
        let text = format!("{}\n{}\n", record("1", "M", 1.25), record("2", "B", 3.0));
        let ds = load_wdbc(text.as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.width(), 10);
        assert_eq!(ds.samples()[0].diagnosis, Diagnosis::A);
        assert_eq!(ds.samples()[1].diagnosis, Diagnosis::N);
        let expected: Vec<f64> = (0..10).map(|k| 1.25 + k as f64 * 0.5).collect();
        assert_eq!(ds.samples()[0].features, expected);
        assert_eq!(ds.schema()[7], "concave_points");
    }

    #[test]
    fn crlf_and_trailing_blank_lines() {
        let text = format!("{}\r\n{}\r\n\r\n", record("1", "M", 1.0), record("2", "B", 2.0));
        assert_eq!(load_wdbc(text.as_bytes()).unwrap().len(), 2);
    }

    #[test]
    fn empty_source() {
        assert!(matches!(load_wdbc("".as_bytes()), Err(Error::EmptySource)));
        assert_eq!(load_wdbc("".as_bytes()).unwrap_err().to_string(), "empty source");
    }

    #[test]
    fn rejects_malformed_records() {
        let short = "1,M,1.0,2.0\n";
        assert!(matches!(load_wdbc(short.as_bytes()), Err(Error::Record { record: 1, .. })));

        let bad_code = format!("{}\n{}\n", record("1", "M", 1.0), record("2", "X", 1.0));
        assert!(matches!(load_wdbc(bad_code.as_bytes()), Err(Error::Record { record: 2, .. })));

        let bad_real = record("1", "B", 1.0).replacen("1.5", "1.5x", 1);
        let err = load_wdbc(bad_real.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unparsable"), "{err}");

        let dup = format!("{}\n{}\n", record("7", "M", 1.0), record("7", "B", 1.0));
        assert!(matches!(load_wdbc(dup.as_bytes()), Err(Error::DuplicateId { record: 2, .. })));
    }

    fn toy(n_a: usize, n_n: usize) -> Dataset {
        let samples = (0..n_a + n_n)
            .map(|i| Sample {
                id: format!("s{i}"),
                diagnosis: if i < n_a { Diagnosis::A } else { Diagnosis::N },
                features: vec![i as f64, (i * 2) as f64],
            })
            .collect();
        Dataset::new(vec!["x".into(), "y".into()], samples).unwrap()
    }

    #[test]
    fn quotas_hit_target() {
        assert_eq!(class_quotas([212, 357], 448), [167, 281]);
        assert_eq!(class_quotas([1, 1], 1).iter().sum::<usize>(), 1);
        assert_eq!(class_quotas([3, 3], 3).iter().sum::<usize>(), 3);
    }

    #[test]
    fn split_sizes_and_errors() {
        let ds = toy(212, 357);
        let split = train_test_split(&ds, 448, 3).unwrap();
        assert_eq!(split.train.len(), 448);
        assert_eq!(split.test.len(), 121);
        assert_eq!(split.method, SplitMethod::Stratified);
        assert!(train_test_split(&ds, 569, 3).is_err());
        assert!(train_test_split(&ds, 0, 3).is_err());
        assert!(matches!(train_test_split(&toy(5, 0), 2, 0), Err(Error::MissingClass("N"))));
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy(40, 60);
        let a = train_test_split(&ds, 70, 11).unwrap();
        let b = train_test_split(&ds, 70, 11).unwrap();
        assert_eq!(a, b);
        let c = train_test_split(&ds, 70, 12).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn projection() {
        let ds = toy(2, 2);
        assert_eq!(select_features(&ds, ds.schema()).unwrap(), ds);
        let p = select_features(&ds, &["y"]).unwrap();
        assert_eq!(p.width(), 1);
        assert_eq!(p.samples()[3].features, vec![6.0]);
        assert!(matches!(select_features(&ds, &["bogus"]), Err(Error::UnknownFeature(_))));
        assert!(matches!(select_features(&ds, &["x", "x"]), Err(Error::DuplicateFeature(_))));
        assert!(select_features::<&str>(&ds, &[]).is_err());
    }
}
