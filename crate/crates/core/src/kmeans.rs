//! Lloyd's k-means with seeded random-point restarts, plus the cluster
//! diagnostics reported alongside it (purity, attribute importance).

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Diagnosis};
use crate::error::{Error, Result};
use crate::stats::compute_stats;
use crate::store::decimal;

pub const CLUSTER_FEATURE: &str = "cluster";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { k: 2, restarts: 10, max_iter: 100, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub features: Vec<String>,
    #[serde(with = "decimal::matrix")]
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    #[serde(with = "decimal")]
    pub wcss: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lower index.
fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, sq_dist(&centroids[0], x));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn wcss_of(centroids: &[Vec<f64>], points: &[&[f64]]) -> f64 {
    points.iter().map(|p| nearest(centroids, p).1).sum()
}

struct RunResult {
    centroids: Vec<Vec<f64>>,
    wcss: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn lloyd(points: &[&[f64]], mut centroids: Vec<Vec<f64>>, params: &KMeansParams) -> RunResult {
    let (k, d) = (centroids.len(), points[0].len());
    let mut assignment: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        let next: Vec<usize> = points.iter().map(|p| nearest(&centroids, p).0).collect();
        // Unchanged assignment means the centroids already are its means.
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
        iterations += 1;

        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        let mut updated = centroids.clone();
        for c in 0..k {
            if counts[c] > 0 {
                updated[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseed with the point farthest from its own centroid.
                let far = points
                    .iter()
                    .zip(&assignment)
                    .enumerate()
                    .map(|(i, (p, &a))| (i, sq_dist(p, &updated[a])))
                    .fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b })
                    .0;
                updated[c] = points[far].to_vec();
            }
        }
        let movement = centroids
            .iter()
            .zip(&updated)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        centroids = updated;
        trace.push(wcss_of(&centroids, points));
        if movement < params.tol {
            // One more assignment pass decides whether this is a fixed point.
            let check: Vec<usize> = points.iter().map(|p| nearest(&centroids, p).0).collect();
            if check == assignment {
                converged = true;
                break;
            }
        }
    }
    let wcss = wcss_of(&centroids, points);
    RunResult { centroids, wcss, iterations, converged, trace }
}

impl KMeansModel {
    /// Fits on every feature of `features`. Values are expected in [0, 1].
    pub fn fit(features: &Dataset, seed: u64, params: &KMeansParams) -> Result<Self> {
        Self::fit_traced(features, seed, params).map(|(m, _)| m)
    }

    /// Like [`KMeansModel::fit`], also returning the WCSS after each Lloyd
    /// iteration of the winning restart.
    pub fn fit_traced(features: &Dataset, seed: u64, params: &KMeansParams) -> Result<(Self, Vec<f64>)> {
        if params.k < 2 {
            return Err(Error::InvalidArgument(format!("k must be at least 2, got {}", params.k)));
        }
        if params.restarts == 0 || params.max_iter == 0 {
            return Err(Error::InvalidArgument("restarts and max_iter must be positive".into()));
        }
        let points: Vec<&[f64]> = features.samples().iter().map(|s| s.features.as_slice()).collect();
        if points.len() < params.k {
            return Err(Error::InsufficientData(format!(
                "{} samples for k = {}",
                points.len(),
                params.k
            )));
        }
        if let Some(v) = points.iter().flat_map(|p| p.iter()).find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("k-means input {v} outside [0, 1]")));
        }
        // Distinct-by-value initial centroids need at least k distinct points.
        let mut distinct: Vec<&[f64]> = Vec::new();
        for p in &points {
            if !distinct.contains(p) {
                distinct.push(p);
                if distinct.len() == params.k {
                    break;
                }
            }
        }
        if distinct.len() < params.k {
            return Err(Error::InsufficientData(format!("fewer than {} distinct points", params.k)));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<RunResult> = None;
        for _ in 0..params.restarts {
            let init = loop {
                let idx = sample_indices(&mut rng, points.len(), params.k);
                let cand: Vec<Vec<f64>> = idx.iter().map(|i| points[i].to_vec()).collect();
                let unique = (0..cand.len()).all(|a| (a + 1..cand.len()).all(|b| cand[a] != cand[b]));
                if unique {
                    break cand;
                }
            };
            let run = lloyd(&points, init, params);
            if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
                best = Some(run);
            }
        }
        let best = best.expect("restarts > 0");
        let model = Self {
            k: params.k,
            features: features.schema().to_vec(),
            centroids: best.centroids,
            seed,
            wcss: best.wcss,
            iterations: best.iterations,
            restarts: params.restarts,
            converged: best.converged,
        };
        Ok((model, best.trace))
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn assign(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(nearest(&self.centroids, x).0)
    }

    pub fn assign_all(&self, ds: &Dataset) -> Result<Vec<usize>> {
        ds.samples().iter().map(|s| self.assign(&s.features)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterPurity {
    pub cluster: usize,
    pub count_a: usize,
    pub count_n: usize,
    pub share_a: f64,
    pub share_n: f64,
}

/// Label distribution per cluster. Empty clusters report zero shares.
pub fn cluster_purity(m: &KMeansModel, ds: &Dataset) -> Result<Vec<ClusterPurity>> {
    let assignment = m.assign_all(ds)?;
    Ok(purity_from_assignment(m.k, &assignment, &ds.labels()))
}

pub fn purity_from_assignment(k: usize, assignment: &[usize], labels: &[Diagnosis]) -> Vec<ClusterPurity> {
    let mut counts = vec![[0usize; 2]; k];
    for (&c, &l) in assignment.iter().zip(labels) {
        counts[c][l.index()] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(cluster, &[a, n])| {
            let total = (a + n) as f64;
            let share = |c: usize| if a + n == 0 { 0.0 } else { c as f64 / total };
            ClusterPurity { cluster, count_a: a, count_n: n, share_a: share(a), share_n: share(n) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterImportance {
    /// `(feature, share)`; shares sum to one.
    pub shares: Vec<(String, f64)>,
}

impl ClusterImportance {
    pub fn get(&self, feature: &str) -> Option<f64> {
        self.shares.iter().find(|(n, _)| n == feature).map(|(_, s)| *s)
    }
}

/// Standardized centroid separation `|c1 − c2| / σ` per feature, normalized.
pub fn feature_importance(m: &KMeansModel, ds: &Dataset) -> Result<ClusterImportance> {
    if m.k != 2 {
        return Err(Error::InvalidArgument("feature importance requires k = 2".into()));
    }
    ds.ensure_schema(&m.features)?;
    let raw = (0..m.dim())
        .map(|j| {
            let st = compute_stats(&ds.column(j))?;
            if st.std == 0.0 {
                return Err(Error::ZeroVariance(m.features[j].clone()));
            }
            Ok((m.centroids[0][j] - m.centroids[1][j]).abs() / st.std)
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateCentroids);
    }
    Ok(ClusterImportance {
        shares: m.features.iter().cloned().zip(raw.iter().map(|r| r / total)).collect(),
    })
}

/// Appends the 0-based cluster index as a `cluster` feature.
pub fn attach_cluster_feature(ds: &Dataset, m: &KMeansModel) -> Result<Dataset> {
    if ds.feature_index(CLUSTER_FEATURE).is_some() {
        return Err(Error::NameCollision(CLUSTER_FEATURE.into()));
    }
    let mut schema = ds.schema().to_vec();
    schema.push(CLUSTER_FEATURE.into());
    let rows = ds
        .samples()
        .iter()
        .map(|s| {
            let c = m.assign(&s.features)?;
            let mut row = s.features.clone();
            row.push(c as f64);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    ds.with_features(schema, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;

    fn blobs() -> (Dataset, Vec<usize>) {
        let mut samples = Vec::new();
        let mut truth = Vec::new();
        for i in 0..40 {
            let blob = i % 2;
            let centre = if blob == 0 { 0.1 } else { 0.9 };
            let jitter = (i as f64 * 0.37).sin() * 0.05;
            samples.push(Sample {
                id: format!("p{i}"),
                diagnosis: if blob == 0 { Diagnosis::A } else { Diagnosis::N },
                features: vec![centre + jitter, centre - jitter, centre],
            });
            truth.push(blob);
        }
        (Dataset::new(vec!["a".into(), "b".into(), "c".into()], samples).unwrap(), truth)
    }

    fn model(centroids: Vec<Vec<f64>>) -> KMeansModel {
        KMeansModel {
            k: centroids.len(),
            features: (0..centroids[0].len()).map(|j| format!("f{j}")).collect(),
            centroids,
            seed: 0,
            wcss: 0.0,
            iterations: 0,
            restarts: 1,
            converged: true,
        }
    }

    #[test]
    fn separates_blobs() {
        let (ds, truth) = blobs();
        let m = KMeansModel::fit(&ds, 5, &KMeansParams::default()).unwrap();
        let a = m.assign_all(&ds).unwrap();
        let flip = a[0] != truth[0];
        for (x, t) in a.iter().zip(&truth) {
            assert_eq!(*x, if flip { 1 - t } else { *t });
        }
        assert!(m.converged);
    }

    #[test]
    fn fixed_point_on_small_instance() {
        let pts = [[0.1, 0.2], [0.15, 0.3], [0.5, 0.5], [0.7, 0.9], [0.8, 0.85], [0.95, 0.6], [0.3, 0.1]];
        let samples = pts
            .iter()
            .enumerate()
            .map(|(i, p)| Sample { id: i.to_string(), diagnosis: Diagnosis::N, features: p.to_vec() })
            .collect();
        let ds = Dataset::new(vec!["x".into(), "y".into()], samples).unwrap();
        let m = KMeansModel::fit(&ds, 42, &KMeansParams::default()).unwrap();
        assert!(m.converged);
        let assignment = m.assign_all(&ds).unwrap();
        for (p, &c) in pts.iter().zip(&assignment) {
            for other in &m.centroids {
                assert!(sq_dist(p, &m.centroids[c]) <= sq_dist(p, other));
            }
        }
        for c in 0..m.k {
            let members: Vec<_> = pts.iter().zip(&assignment).filter(|(_, &a)| a == c).collect();
            for j in 0..2 {
                let mean = members.iter().map(|(p, _)| p[j]).sum::<f64>() / members.len() as f64;
                assert!((mean - m.centroids[c][j]).abs() < 1e-12);
            }
        }
        let recomputed: f64 = pts.iter().zip(&assignment).map(|(p, &c)| sq_dist(p, &m.centroids[c])).sum();
        assert!((recomputed - m.wcss).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let (ds, _) = blobs();
        let p = KMeansParams { k: 1, ..Default::default() };
        assert!(KMeansModel::fit(&ds, 0, &p).is_err());
        let p = KMeansParams { k: 41, ..Default::default() };
        assert!(matches!(KMeansModel::fit(&ds, 0, &p), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn assignment_rules() {
        let m = model(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(m.assign(&[1.0, 0.0]).unwrap(), 1);
        assert_eq!(m.assign(&[0.5, 0.3]).unwrap(), 0);
        assert_eq!(m.assign(&[0.5 + 1e-9, 0.3]).unwrap(), 1);
        assert!(matches!(m.assign(&[0.5]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn purity_counts() {
        use Diagnosis::*;
        let p = purity_from_assignment(2, &[0, 0, 0, 0], &[A, A, A, N]);
        assert_eq!((p[0].count_a, p[0].count_n), (3, 1));
        assert_eq!((p[0].share_a, p[0].share_n), (0.75, 0.25));
        assert_eq!((p[1].count_a, p[1].share_n), (0, 0.0));
        let all_n = purity_from_assignment(2, &[0, 1, 1], &[N, N, N]);
        assert!(all_n.iter().all(|c| c.share_n == 1.0));
    }

    #[test]
    fn importance() {
        let (ds, _) = blobs();
        let mut m = model(vec![vec![0.2, 0.5, 0.5], vec![0.2, 0.5, 0.9]]);
        m.features = ds.schema().to_vec();
        let imp = feature_importance(&m, &ds).unwrap();
        assert_eq!(imp.get("c"), Some(1.0));
        assert_eq!(imp.get("a"), Some(0.0));
        m.centroids[1] = m.centroids[0].clone();
        assert!(matches!(feature_importance(&m, &ds), Err(Error::DegenerateCentroids)));
    }

    #[test]
    fn cluster_attribute() {
        let (ds, _) = blobs();
        let m = KMeansModel::fit(&ds, 1, &KMeansParams::default()).unwrap();
        let out = attach_cluster_feature(&ds, &m).unwrap();
        assert_eq!(out.width(), ds.width() + 1);
        let a = m.assign_all(&ds).unwrap();
        for (s, c) in out.samples().iter().zip(a) {
            assert_eq!(*s.features.last().unwrap(), c as f64);
        }
        assert!(matches!(attach_cluster_feature(&out, &m), Err(Error::NameCollision(_))));
    }
}
