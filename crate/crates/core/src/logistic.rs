//! Binary logistic regression fitted by damped Newton ascent on the
//! L2-penalized log-likelihood.
//!
//! Labels are encoded A = 1, N = 0. The intercept is not penalized.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Diagnosis};
use crate::ensemble::Classifier;
use crate::error::{Error, Result};
use crate::store::decimal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFitParams {
    pub max_iter: usize,
    #[serde(with = "decimal")]
    pub grad_tol: f64,
    #[serde(with = "decimal")]
    pub l2: f64,
}

impl Default for LogisticFitParams {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-6, l2: 1e-6 }
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn score(weights: &[f64], intercept: f64, x: &[f64]) -> f64 {
    intercept + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
}

/// `Σ [y z − ln(1 + e^z)] − (l2 / 2) ‖w‖²` with `z = w·x + b`.
pub fn penalized_log_likelihood(x: &[Vec<f64>], y: &[f64], weights: &[f64], intercept: f64, l2: f64) -> f64 {
    let ll: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &t)| {
            let z = score(weights, intercept, row);
            t * z - softplus(z)
        })
        .sum();
    ll - 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`penalized_log_likelihood`]; the last entry is the intercept.
pub fn gradient(x: &[Vec<f64>], y: &[f64], weights: &[f64], intercept: f64, l2: f64) -> Vec<f64> {
    let d = weights.len();
    let mut g = vec![0.0; d + 1];
    for (row, &t) in x.iter().zip(y) {
        let r = t - sigmoid(score(weights, intercept, row));
        for j in 0..d {
            g[j] += r * row[j];
        }
        g[d] += r;
    }
    for j in 0..d {
        g[j] -= l2 * weights[j];
    }
    g
}

/// Negated Hessian `Xᵀ W X + l2·I_w` (intercept row/column unpenalized).
fn neg_hessian(x: &[Vec<f64>], weights: &[f64], intercept: f64, l2: f64) -> Vec<Vec<f64>> {
    let d = weights.len();
    let mut h = vec![vec![0.0; d + 1]; d + 1];
    let mut aug = vec![1.0; d + 1];
    for row in x {
        let p = sigmoid(score(weights, intercept, row));
        let w = p * (1.0 - p);
        aug[..d].copy_from_slice(row);
        for i in 0..=d {
            for j in 0..=i {
                h[i][j] += w * aug[i] * aug[j];
            }
        }
    }
    for i in 0..=d {
        for j in 0..i {
            h[j][i] = h[i][j];
        }
    }
    for (j, row) in h.iter_mut().enumerate().take(d) {
        row[j] += l2;
    }
    h
}

/// Solves `A v = b` for symmetric positive-definite `A` by Cholesky.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if !(v > 0.0) || !v.is_finite() {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut v = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * v[k]).sum();
        v[i] = (z[i] - s) / l[i][i];
    }
    v.iter().all(|c| c.is_finite()).then_some(v)
}

fn max_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub feature: String,
    #[serde(with = "decimal")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LogisticRepr {
    coefficients: Vec<FeatureWeight>,
    #[serde(with = "decimal")]
    intercept: f64,
    converged: bool,
    iterations: usize,
    #[serde(with = "decimal")]
    grad_max_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "LogisticRepr", into = "LogisticRepr")]
pub struct LogisticModel {
    pub schema: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_max_norm: f64,
}

impl From<LogisticRepr> for LogisticModel {
    fn from(r: LogisticRepr) -> Self {
        Self {
            schema: r.coefficients.iter().map(|c| c.feature.clone()).collect(),
            weights: r.coefficients.iter().map(|c| c.weight).collect(),
            intercept: r.intercept,
            converged: r.converged,
            iterations: r.iterations,
            grad_max_norm: r.grad_max_norm,
        }
    }
}

impl From<LogisticModel> for LogisticRepr {
    fn from(m: LogisticModel) -> Self {
        Self {
            coefficients: m
                .schema
                .into_iter()
                .zip(m.weights)
                .map(|(feature, weight)| FeatureWeight { feature, weight })
                .collect(),
            intercept: m.intercept,
            converged: m.converged,
            iterations: m.iterations,
            grad_max_norm: m.grad_max_norm,
        }
    }
}

impl LogisticModel {
    pub fn fit(train: &Dataset, params: LogisticFitParams) -> Result<Self> {
        let x: Vec<Vec<f64>> = train.samples().iter().map(|s| s.features.clone()).collect();
        let y: Vec<f64> = train
            .labels()
            .iter()
            .map(|d| if *d == Diagnosis::A { 1.0 } else { 0.0 })
            .collect();
        Self::fit_arrays(train.schema().to_vec(), &x, &y, params)
    }

    /// Fits on raw arrays; `y` holds 1.0 for A and 0.0 for N.
    pub fn fit_arrays(schema: Vec<String>, x: &[Vec<f64>], y: &[f64], params: LogisticFitParams) -> Result<Self> {
        Self::fit_arrays_traced(schema, x, y, params).map(|(m, _)| m)
    }

    /// Like [`LogisticModel::fit_arrays`], also returning the objective value
    /// before the first step and after every accepted step.
    pub fn fit_arrays_traced(
        schema: Vec<String>,
        x: &[Vec<f64>],
        y: &[f64],
        params: LogisticFitParams,
    ) -> Result<(Self, Vec<f64>)> {
        if x.is_empty() {
            return Err(Error::InvalidDataset("empty training set".into()));
        }
        if params.max_iter == 0 || !(params.grad_tol > 0.0) || !(params.l2 >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid logistic parameters {params:?}")));
        }
        if x.iter().any(|r| r.len() != schema.len()) || y.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: schema.len(), found: x[0].len() });
        }
        let positives = y.iter().filter(|&&t| t == 1.0).count();
        if positives == 0 || positives == y.len() {
            return Err(Error::SingleClass);
        }

        let d = schema.len();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut obj = penalized_log_likelihood(x, y, &w, b, params.l2);
        let mut trace = vec![obj];
        let mut g = gradient(x, y, &w, b, params.l2);
        let mut iterations = 0;
        let mut converged = max_norm(&g) < params.grad_tol;

        while !converged && iterations < params.max_iter {
            let h = neg_hessian(x, &w, b, params.l2);
            let newton = cholesky_solve(&h, &g);
            let mut stepped = false;
            for dir in newton.iter().chain(std::iter::once(&g)) {
                let mut t = 1.0;
                for _ in 0..60 {
                    let cw: Vec<f64> = w.iter().zip(dir).map(|(wj, dj)| wj + t * dj).collect();
                    let cb = b + t * dir[d];
                    let cobj = penalized_log_likelihood(x, y, &cw, cb, params.l2);
                    if cobj.is_finite() && cobj >= obj {
                        w = cw;
                        b = cb;
                        obj = cobj;
                        stepped = true;
                        break;
                    }
                    t *= 0.5;
                }
                if stepped {
                    break;
                }
            }
            if !obj.is_finite() {
                return Err(Error::NonFinite("logistic objective".into()));
            }
            if !stepped {
                // no ascent direction improves the objective at float precision
                break;
            }
            iterations += 1;
            trace.push(obj);
            g = gradient(x, y, &w, b, params.l2);
            converged = max_norm(&g) < params.grad_tol;
        }
        if w.iter().chain(std::iter::once(&b)).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logistic coefficients".into()));
        }
        let model = Self { schema, weights: w, intercept: b, converged, iterations, grad_max_norm: max_norm(&g) };
        Ok((model, trace))
    }

    pub fn linear_score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), found: features.len() });
        }
        Ok(score(&self.weights, self.intercept, features))
    }

    /// P(A), kept strictly inside (0, 1).
    pub fn predict_proba(&self, features: &[f64]) -> Result<f64> {
        Ok(probability(self.linear_score(features)?))
    }

    /// A iff `p ≥ threshold`; confidence is `max(p, 1 − p)`.
    pub fn predict_with_threshold(&self, features: &[f64], threshold: f64) -> Result<(Diagnosis, f64)> {
        Ok(label_probability(self.predict_proba(features)?, threshold))
    }
}

/// Sigmoid clamped to the open unit interval.
pub fn probability(z: f64) -> f64 {
    sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn label_probability(p: f64, threshold: f64) -> (Diagnosis, f64) {
    let label = if p >= threshold { Diagnosis::A } else { Diagnosis::N };
    (label, p.max(1.0 - p))
}

impl Classifier for LogisticModel {
    fn name(&self) -> &str {
        "logistic"
    }

    fn schema(&self) -> &[String] {
        &self.schema
    }

    fn predict(&self, features: &[f64]) -> Result<(Diagnosis, f64)> {
        self.predict_with_threshold(features, 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(weights: Vec<f64>, intercept: f64) -> LogisticModel {
        LogisticModel {
            schema: (0..weights.len()).map(|j| format!("f{j}")).collect(),
            weights,
            intercept,
            converged: true,
            iterations: 0,
            grad_max_norm: 0.0,
        }
    }

    #[test]
    fn intercept_only_matches_base_rate() {
        let x = vec![vec![]; 100];
        let y: Vec<f64> = (0..100).map(|i| if i < 30 { 1.0 } else { 0.0 }).collect();
        let m = LogisticModel::fit_arrays(vec![], &x, &y, LogisticFitParams::default()).unwrap();
        assert!(m.converged);
        assert!((m.intercept - (30.0f64 / 70.0).ln()).abs() < 1e-6, "{}", m.intercept);
    }

    #[test]
    fn separable_weight_sign() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i >= 10 { 1.0 } else { 0.0 }).collect();
        let p = LogisticFitParams { l2: 1e-3, ..Default::default() };
        let m = LogisticModel::fit_arrays(vec!["x".into()], &x, &y, p).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(m.converged);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.1], vec![0.2]];
        let r = LogisticModel::fit_arrays(vec!["x".into()], &x, &[1.0, 1.0], LogisticFitParams::default());
        assert!(matches!(r, Err(Error::SingleClass)));
    }

    #[test]
    fn probabilities() {
        assert_eq!(model(vec![0.0], 0.0).predict_proba(&[0.7]).unwrap(), 0.5);
        let p = model(vec![0.0], 3f64.ln()).predict_proba(&[0.2]).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        let low = model(vec![1.0], -1000.0).predict_proba(&[0.0]).unwrap();
        assert!(low > 0.0 && low.is_finite());
        let high = model(vec![1.0], 1000.0).predict_proba(&[0.0]).unwrap();
        assert!(high < 1.0);
        assert!(model(vec![1.0], 0.0).predict_proba(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn labels_and_confidence() {
        assert_eq!(label_probability(0.5, 0.5), (Diagnosis::A, 0.5));
        assert_eq!(label_probability(0.9, 0.5), (Diagnosis::A, 0.9));
        let (l, c) = label_probability(0.2, 0.5);
        assert_eq!(l, Diagnosis::N);
        assert!((c - 0.8).abs() < 1e-15);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_small_system() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let v = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * v[0] + 2.0 * v[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * v[0] + 3.0 * v[1] - 1.0).abs() < 1e-12);
        assert!(cholesky_solve(&[vec![0.0]], &[1.0]).is_none());
    }
}
