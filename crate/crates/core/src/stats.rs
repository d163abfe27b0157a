//! Descriptive statistics, outlier and normality screens, Pearson correlation
//! and pivot-based correlation pruning.

use crate::config::defaults;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Moments of one feature. `std` is the sample (n − 1) deviation; skewness
/// (g1) and excess kurtosis (g2) use population central moments and are
/// `None` for a constant series.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

fn check_finite(series: &[f64], what: &str) -> Result<()> {
    match series.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::NonFinite(format!("{what}: {v}"))),
        None => Ok(()),
    }
}

fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

pub fn compute_stats(series: &[f64]) -> Result<FeatureStats> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 values, got {n}")));
    }
    check_finite(series, "series")?;
    let mu = mean(series);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let nf = n as f64;
    let ss = m2;
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let constant = min == max;
    let (skewness, kurtosis) = if constant || m2 == 0.0 {
        (None, None)
    } else {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    };
    Ok(FeatureStats {
        n,
        // clamp guards the min ≤ mean ≤ max invariant against summation rounding
        mean: mu.clamp(min, max),
        std: if constant { 0.0 } else { (ss / (nf - 1.0)).sqrt() },
        min,
        max,
        skewness,
        kurtosis,
    })
}

/// Standardizes with the sample mean and sample standard deviation.
pub fn zscore(series: &[f64]) -> Result<Vec<f64>> {
    let st = compute_stats(series)?;
    if st.std == 0.0 {
        return Err(Error::ZeroVariance("series".into()));
    }
    Ok(series.iter().map(|x| (x - st.mean) / st.std).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierEntry {
    pub id: String,
    pub feature: String,
    pub value: f64,
    pub z: f64,
}

/// Advisory list of `(sample, feature)` cells with `|z| > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierReport {
    pub entries: Vec<OutlierEntry>,
    pub threshold: f64,
}

pub fn detect_outliers(ds: &Dataset, threshold: f64) -> Result<OutlierReport> {
    let mut entries = Vec::new();
    for (j, name) in ds.schema().iter().enumerate() {
        let col = ds.column(j);
        let z = zscore(&col).map_err(|e| match e {
            Error::ZeroVariance(_) => Error::ZeroVariance(name.clone()),
            other => other,
        })?;
        for (s, (&value, &z)) in ds.samples().iter().zip(col.iter().zip(&z)) {
            if z.abs() > threshold {
                entries.push(OutlierEntry { id: s.id.clone(), feature: name.clone(), value, z });
            }
        }
    }
    Ok(OutlierReport { entries, threshold })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityEntry {
    pub feature: String,
    pub skewness: f64,
    pub kurtosis: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityScreen {
    pub entries: Vec<NormalityEntry>,
    pub bound: f64,
}

impl NormalityScreen {
    pub fn get(&self, feature: &str) -> Option<&NormalityEntry> {
        self.entries.iter().find(|e| e.feature == feature)
    }
}

/// Passes a feature iff both |skewness| and |excess kurtosis| are within `bound`.
pub fn normality_screen(ds: &Dataset, bound: f64) -> Result<NormalityScreen> {
    let mut entries = Vec::with_capacity(ds.width());
    for (j, name) in ds.schema().iter().enumerate() {
        let col = ds.column(j);
        if col.len() < 4 {
            return Err(Error::InsufficientData(format!("feature {name:?} has fewer than 4 values")));
        }
        let st = compute_stats(&col)?;
        let (Some(skewness), Some(kurtosis)) = (st.skewness, st.kurtosis) else {
            return Err(Error::ZeroVariance(name.clone()));
        };
        entries.push(NormalityEntry {
            feature: name.clone(),
            skewness,
            kurtosis,
            pass: skewness.abs() <= bound && kurtosis.abs() <= bound,
        });
    }
    Ok(NormalityScreen { entries, bound })
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("pearson needs at least 2 pairs".into()));
    }
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Symmetric Pearson matrix with an exact unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.values[self.index(a)?][self.index(b)?])
    }

    /// Builds from an explicit matrix; used for fixtures and tests.
    pub fn from_parts(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = names.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("correlation matrix must be square".into()));
        }
        for i in 0..n {
            if values[i][i] != 1.0 {
                return Err(Error::InvalidArgument("diagonal must be 1".into()));
            }
            for j in 0..n {
                let r = values[i][j];
                if !(-1.0..=1.0).contains(&r) || r != values[j][i] {
                    return Err(Error::InvalidArgument(format!("invalid entry ({i},{j})")));
                }
            }
        }
        Ok(Self { names, values })
    }
}

pub fn correlation_matrix(ds: &Dataset) -> Result<CorrelationMatrix> {
    let d = ds.width();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| ds.column(j)).collect();
    let mut values = vec![vec![0.0; d]; d];
    for i in 0..d {
        values[i][i] = 1.0;
        for j in i + 1..d {
            let r = pearson(&cols[i], &cols[j]).map_err(|e| match e {
                Error::ZeroVariance(_) => {
                    let which = if compute_stats(&cols[i]).map(|s| s.std == 0.0).unwrap_or(true) {
                        i
                    } else {
                        j
                    };
                    Error::ZeroVariance(ds.schema()[which].clone())
                }
                other => other,
            })?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    if d == 1 {
        // width-1 datasets still need a valid (nonconstant) column
        compute_stats(&cols[0])?;
    }
    Ok(CorrelationMatrix { names: ds.schema().to_vec(), values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropRecommendation {
    pub pivot: String,
    /// `(feature, |r|)` in matrix order.
    pub dropped: Vec<(String, f64)>,
    pub threshold: f64,
}

impl DropRecommendation {
    pub fn dropped_names(&self) -> Vec<&str> {
        self.dropped.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Names of `cm` that survive the drop, in matrix order.
    pub fn retained<'a>(&self, names: &'a [String]) -> Vec<&'a str> {
        names
            .iter()
            .filter(|n| !self.dropped.iter().any(|(d, _)| d == *n))
            .map(String::as_str)
            .collect()
    }
}

/// Keeps `pivot` and drops every feature whose |r| with it is at least `tau`.
pub fn recommend_drops(cm: &CorrelationMatrix, pivot: &str, tau: f64) -> Result<DropRecommendation> {
    let p = cm.index(pivot).ok_or_else(|| Error::UnknownFeature(pivot.to_string()))?;
    let dropped = cm
        .names
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != p)
        .filter_map(|(j, name)| {
            let r = cm.values[p][j].abs();
            (r >= tau).then(|| (name.clone(), r))
        })
        .collect();
    Ok(DropRecommendation { pivot: pivot.to_string(), dropped, threshold: tau })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
pub fn histogram(series: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if series.is_empty() || bins == 0 {
        return Err(Error::InsufficientData("histogram needs values and bins".into()));
    }
    check_finite(series, "series")?;
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: min + width * b as f64,
            hi: if b + 1 == bins { max } else { min + width * (b + 1) as f64 },
            count: 0,
        })
        .collect();
    for &x in series {
        let b = if width == 0.0 {
            0
        } else {
            (((x - min) / width).floor() as usize).min(bins - 1)
        };
        out[b].count += 1;
    }
    Ok(out)
}

/// Everything the `eda` report carries.
#[derive(Debug, Clone, PartialEq)]
pub struct EdaReport {
    pub stats: Vec<(String, FeatureStats)>,
    pub outliers: OutlierReport,
    pub normality: NormalityScreen,
    pub correlation: CorrelationMatrix,
    pub histograms: Vec<(String, Vec<HistogramBin>)>,
}

pub fn eda_report(ds: &Dataset, outlier_z: f64, normality_bound: f64) -> Result<EdaReport> {
    let stats = ds
        .schema()
        .iter()
        .enumerate()
        .map(|(j, n)| Ok((n.clone(), compute_stats(&ds.column(j))?)))
        .collect::<Result<Vec<_>>>()?;
    let histograms = ds
        .schema()
        .iter()
        .enumerate()
        .map(|(j, n)| Ok((n.clone(), histogram(&ds.column(j), defaults::HISTOGRAM_BINS)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EdaReport {
        stats,
        outliers: detect_outliers(ds, outlier_z)?,
        normality: normality_screen(ds, normality_bound)?,
        correlation: correlation_matrix(ds)?,
        histograms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Diagnosis, Sample};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn simple_series() {
        let s = compute_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(s.skewness, Some(0.0));
        // population moments: m2 = 2/3, m4 = 2/3 → g2 = 1.5 − 3
        assert!(close(s.kurtosis.unwrap(), -1.5, 1e-12));
    }

    #[test]
    fn textbook_series() {
        let x = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        let s = compute_stats(&x).unwrap();
        assert_eq!(s.mean, 5.0);
        // sum of squares 32, n − 1 = 7
        assert!(close(s.std, (32.0f64 / 7.0).sqrt(), 1e-15));
        assert!(close(s.std, 2.1381, 1e-4));
        let z = zscore(&x).unwrap();
        assert!(close(z[7], 4.0 / (32.0f64 / 7.0).sqrt(), 1e-15));
        assert!(close(z[7], 1.8708, 1e-4));
    }

    #[test]
    fn constant_series() {
        let s = compute_stats(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!(s.skewness, None);
        assert_eq!(s.kurtosis, None);
        assert!(matches!(zscore(&[5.0, 5.0]), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(compute_stats(&[1.0]).is_err());
        assert!(matches!(compute_stats(&[1.0, f64::NAN]), Err(Error::NonFinite(_))));
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
        assert!(matches!(pearson(&[1.0, 2.0], &[3.0, 3.0]), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn zscore_centering_and_idempotence() {
        let x = [1.0, 3.0, 8.0, 2.0, 5.0];
        let st = compute_stats(&x).unwrap();
        let z = zscore(&x).unwrap();
        let mu_idx = zscore(&[st.mean, 1.0, 3.0, 8.0, 2.0, 5.0]).unwrap();
        assert!(close(mu_idx[0], 0.0, 1e-12));
        let zz = zscore(&z).unwrap();
        for (a, b) in z.iter().zip(&zz) {
            assert!(close(*a, *b, 1e-9));
        }
    }

    #[test]
    fn pearson_extremes() {
        let x = [0.3, 1.2, 2.5, 2.6, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        assert_eq!(pearson(&x, &neg).unwrap(), -1.0);
    }

    fn single_feature(values: &[f64]) -> Dataset {
        let samples = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Sample { id: i.to_string(), diagnosis: Diagnosis::N, features: vec![v] })
            .collect();
        Dataset::new(vec!["f".into()], samples).unwrap()
    }

    #[test]
    fn one_far_point_is_flagged() {
        // 100 points alternating 1 ± 0.01, plus one point far out.
        let mut v: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 0.99 } else { 1.01 }).collect();
        v.push(1.0 + 10.0 * 0.01 * 10.0);
        let ds = single_feature(&v);
        let rep = detect_outliers(&ds, 4.0).unwrap();
        assert_eq!(rep.entries.len(), 1);
        assert_eq!(rep.entries[0].id, "100");
        let z = zscore(&v).unwrap();
        assert_eq!(rep.entries[0].z, z[100]);
        assert!(z.iter().take(100).all(|z| z.abs() <= 4.0));
    }

    #[test]
    fn nothing_beyond_one_std() {
        let ds = single_feature(&[-1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        assert!(detect_outliers(&ds, 4.0).unwrap().entries.is_empty());
        assert!(matches!(detect_outliers(&single_feature(&[2.0, 2.0]), 4.0), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn normality_on_normal_sample() {
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        // Box–Muller, fixed seed
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut v = Vec::with_capacity(10_000);
        while v.len() < 10_000 {
            let u1: f64 = rand::Rng::gen_range(&mut rng, f64::EPSILON..1.0);
            let u2: f64 = rand::Rng::gen(&mut rng);
            let r = (-2.0 * u1.ln()).sqrt();
            v.push(r * (std::f64::consts::TAU * u2).cos());
            v.push(r * (std::f64::consts::TAU * u2).sin());
        }
        let screen = normality_screen(&single_feature(&v), 2.0).unwrap();
        let e = &screen.entries[0];
        assert!(e.pass);
        assert!(e.skewness.abs() < 0.1 && e.kurtosis.abs() < 0.2, "{e:?}");
        assert!(normality_screen(&single_feature(&[3.0; 6]), 2.0).is_err());
    }

    #[test]
    fn correlation_matrix_small_cases() {
        let one = correlation_matrix(&single_feature(&[1.0, 2.0, 4.0])).unwrap();
        assert_eq!(one.values(), &[vec![1.0]]);
        let samples = (0..5)
            .map(|i| Sample {
                id: i.to_string(),
                diagnosis: Diagnosis::A,
                features: vec![i as f64 * 1.5, i as f64 * 1.5],
            })
            .collect();
        let ds = Dataset::new(vec!["a".into(), "b".into()], samples).unwrap();
        assert_eq!(correlation_matrix(&ds).unwrap().get("a", "b"), Some(1.0));
    }

    #[test]
    fn drop_recommendations() {
        let names: Vec<String> = ["p", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let identity: Vec<Vec<f64>> =
            (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let cm = CorrelationMatrix::from_parts(names.clone(), identity).unwrap();
        assert!(recommend_drops(&cm, "p", 0.65).unwrap().dropped.is_empty());
        assert!(matches!(recommend_drops(&cm, "zz", 0.65), Err(Error::UnknownFeature(_))));

        let m = vec![
            vec![1.0, 0.998, -0.7, 0.3],
            vec![0.998, 1.0, 0.1, 0.1],
            vec![-0.7, 0.1, 1.0, 0.1],
            vec![0.3, 0.1, 0.1, 1.0],
        ];
        let cm = CorrelationMatrix::from_parts(names.clone(), m).unwrap();
        let rec = recommend_drops(&cm, "p", 0.65).unwrap();
        assert_eq!(rec.dropped_names(), vec!["a", "b"]);
        assert_eq!(rec.retained(&names), vec!["p", "c"]);
        assert_eq!(recommend_drops(&cm, "p", 0.9).unwrap().dropped_names(), vec!["a"]);
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 1.0, 2.0, 3.0, 4.0], 4).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 1, 1, 2]);
        assert_eq!(h[3].hi, 4.0);
        let c = histogram(&[2.0, 2.0], 3).unwrap();
        assert_eq!(c[0].count, 2);
    }
}
