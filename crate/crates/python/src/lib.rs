//! Python bindings: datasets, statistics, scaling, k-means, CART, logistic
//! regression, the voting ensemble, rate reports, bundles and full runs.
//!
//! Labels cross the boundary as the strings `"A"` and `"N"`. Usage and data
//! errors raise `ValueError`, numerical failures `ArithmeticError` and I/O
//! failures `OSError`.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use histoensemble::cart::{CartModel, CartParams};
use histoensemble::config::PipelineConfig;
use histoensemble::data::{self, Diagnosis, Sample};
use histoensemble::ensemble::{EnsembleModel, TiePolicy};
use histoensemble::error::{Error, ErrorKind};
use histoensemble::evaluation::{self, ConfusionMatrix, RateReport};
use histoensemble::kmeans::{self, KMeansModel, KMeansParams};
use histoensemble::logistic::{LogisticFitParams, LogisticModel};
use histoensemble::pipeline::{self, ModelEvaluation};
use histoensemble::scaler;
use histoensemble::stats;
use histoensemble::store::{self, ModelBundle};

fn err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io(_) => PyOSError::new_err(msg),
        _ if e.kind() == ErrorKind::Numerical => PyArithmeticError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

trait OrPyErr<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPyErr<T> for histoensemble::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn label(s: &str) -> PyResult<Diagnosis> {
    s.parse::<Diagnosis>().py()
}

#[pyclass(name = "Dataset", module = "histoensemble", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDataset {
    inner: data::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(schema: Vec<String>, ids: Vec<String>, labels: Vec<String>, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        if ids.len() != labels.len() || ids.len() != rows.len() {
            return Err(PyValueError::new_err("ids, labels and rows must have equal length"));
        }
        let samples = ids
            .into_iter()
            .zip(labels)
            .zip(rows)
            .map(|((id, l), features)| Ok(Sample { id, diagnosis: label(&l)?, features }))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self { inner: data::Dataset::new(schema, samples).py()? })
    }

    /// Reads a `wdbc.data` file, keeping the ten mean features.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: data::load_wdbc_path(path).py()? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset({} samples, {} features)", self.inner.len(), self.inner.width())
    }

    #[getter]
    fn schema(&self) -> Vec<String> {
        self.inner.schema().to_vec()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.samples().iter().map(|s| s.id.clone()).collect()
    }

    #[getter]
    fn labels(&self) -> Vec<&'static str> {
        self.inner.samples().iter().map(|s| s.diagnosis.as_str()).collect()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.samples().iter().map(|s| s.features.clone()).collect()
    }

    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let j = self
            .inner
            .feature_index(name)
            .ok_or_else(|| err(Error::UnknownFeature(name.to_string())))?;
        Ok(self.inner.column(j))
    }

    /// Stratified seeded split into `(train, test)`.
    fn split(&self, train_count: usize, seed: u64) -> PyResult<(Self, Self)> {
        let s = data::train_test_split(&self.inner, train_count, seed).py()?;
        Ok((Self { inner: s.train }, Self { inner: s.test }))
    }

    fn select(&self, features: Vec<String>) -> PyResult<Self> {
        Ok(Self { inner: data::select_features(&self.inner, &features).py()? })
    }
}

/// Mean, sample std, extrema, skewness and excess kurtosis of a series.
#[pyfunction]
fn compute_stats<'py>(py: Python<'py>, series: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let s = stats::compute_stats(&series).py()?;
    let d = PyDict::new(py);
    d.set_item("n", s.n)?;
    d.set_item("mean", s.mean)?;
    d.set_item("std", s.std)?;
    d.set_item("min", s.min)?;
    d.set_item("max", s.max)?;
    d.set_item("skewness", s.skewness)?;
    d.set_item("kurtosis", s.kurtosis)?;
    Ok(d)
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    stats::pearson(&x, &y).py()
}

/// `(names, matrix)` of pairwise Pearson correlations.
#[pyfunction]
fn correlation_matrix(ds: &PyDataset) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let cm = stats::correlation_matrix(&ds.inner).py()?;
    Ok((cm.names().to_vec(), cm.values().to_vec()))
}

/// Maps each feature to `(excess kurtosis, passes)` for the `[-bound, bound]` screen.
#[pyfunction]
#[pyo3(signature = (ds, bound = 2.0))]
fn normality_screen<'py>(py: Python<'py>, ds: &PyDataset, bound: f64) -> PyResult<Bound<'py, PyDict>> {
    let screen = stats::normality_screen(&ds.inner, bound).py()?;
    let d = PyDict::new(py);
    for e in screen.entries {
        d.set_item(e.feature, (e.kurtosis, e.pass))?;
    }
    Ok(d)
}

/// Features whose |r| with `pivot` is at least `tau`, as `(name, |r|)`.
#[pyfunction]
#[pyo3(signature = (ds, pivot = "radius", tau = 0.65))]
fn recommend_drops(ds: &PyDataset, pivot: &str, tau: f64) -> PyResult<Vec<(String, f64)>> {
    let cm = stats::correlation_matrix(&ds.inner).py()?;
    Ok(stats::recommend_drops(&cm, pivot, tau).py()?.dropped)
}

#[pyclass(name = "MinMaxScaler", module = "histoensemble", frozen)]
pub struct PyMinMaxScaler {
    inner: scaler::MinMaxScaler,
}

#[pymethods]
impl PyMinMaxScaler {
    #[staticmethod]
    fn fit(train: &PyDataset) -> PyResult<Self> {
        Ok(Self { inner: scaler::MinMaxScaler::fit(&train.inner).py()? })
    }

    fn transform(&self, ds: &PyDataset) -> PyResult<PyDataset> {
        Ok(PyDataset { inner: self.inner.transform(&ds.inner).py()? })
    }

    fn transform_row(&self, row: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.transform_row(&row).py()
    }

    fn inverse_row(&self, row: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.inverse_row(&row).py()
    }

    /// `(name, min, max)` per feature.
    #[getter]
    fn ranges(&self) -> Vec<(String, f64, f64)> {
        self.inner.features.iter().map(|f| (f.name.clone(), f.min, f.max)).collect()
    }
}

#[pyclass(name = "KMeans", module = "histoensemble", frozen)]
pub struct PyKMeans {
    inner: KMeansModel,
}

#[pymethods]
impl PyKMeans {
    #[staticmethod]
    #[pyo3(signature = (ds, seed, k = 2, restarts = 10, max_iter = 100))]
    fn fit(ds: &PyDataset, seed: u64, k: usize, restarts: usize, max_iter: usize) -> PyResult<Self> {
        let params = KMeansParams { k, restarts, max_iter, ..KMeansParams::default() };
        Ok(Self { inner: KMeansModel::fit(&ds.inner, seed, &params).py()? })
    }

    #[getter]
    fn centroids(&self) -> Vec<Vec<f64>> {
        self.inner.centroids.clone()
    }

    #[getter]
    fn wcss(&self) -> f64 {
        self.inner.wcss
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    fn assign(&self, row: Vec<f64>) -> PyResult<usize> {
        self.inner.assign(&row).py()
    }

    /// `(count_a, count_n, share_a, share_n)` per cluster.
    fn purity(&self, ds: &PyDataset) -> PyResult<Vec<(usize, usize, f64, f64)>> {
        let p = kmeans::cluster_purity(&self.inner, &ds.inner).py()?;
        Ok(p.into_iter().map(|c| (c.count_a, c.count_n, c.share_a, c.share_n)).collect())
    }

    fn importance(&self, ds: &PyDataset) -> PyResult<Vec<(String, f64)>> {
        Ok(kmeans::feature_importance(&self.inner, &ds.inner).py()?.shares)
    }
}

#[pyclass(name = "Cart", module = "histoensemble", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCart {
    inner: CartModel,
}

#[pymethods]
impl PyCart {
    #[staticmethod]
    #[pyo3(signature = (train, max_depth = 5, min_leaf = 5, min_gini_decrease = 1e-4))]
    fn train(train: &PyDataset, max_depth: usize, min_leaf: usize, min_gini_decrease: f64) -> PyResult<Self> {
        let params = CartParams { max_depth, min_leaf, min_gini_decrease };
        Ok(Self { inner: CartModel::train(&train.inner, params).py()? })
    }

    /// `(label, confidence)`.
    fn predict(&self, row: Vec<f64>) -> PyResult<(&'static str, f64)> {
        let (l, c) = self.inner.predict(&row).py()?;
        Ok((l.as_str(), c))
    }

    fn rules(&self) -> String {
        self.inner.rules()
    }
}

#[pyclass(name = "Logistic", module = "histoensemble", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyLogistic {
    inner: LogisticModel,
}

#[pymethods]
impl PyLogistic {
    #[staticmethod]
    #[pyo3(signature = (train, l2 = 1e-6, max_iter = 200))]
    fn fit(train: &PyDataset, l2: f64, max_iter: usize) -> PyResult<Self> {
        let params = LogisticFitParams { l2, max_iter, ..LogisticFitParams::default() };
        Ok(Self { inner: LogisticModel::fit(&train.inner, params).py()? })
    }

    #[getter]
    fn weights(&self) -> Vec<(String, f64)> {
        self.inner.schema.iter().cloned().zip(self.inner.weights.iter().copied()).collect()
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.inner.intercept
    }

    fn predict_proba(&self, row: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_proba(&row).py()
    }

    /// `(label, confidence)` at the 0.5 threshold.
    fn predict(&self, row: Vec<f64>) -> PyResult<(&'static str, f64)> {
        let (l, c) = self.inner.predict_with_threshold(&row, 0.5).py()?;
        Ok((l.as_str(), c))
    }
}

/// Highest-confidence vote of a CART tree and a logistic model:
/// `(label, confidence, winning member)`.
#[pyfunction]
fn ensemble_predict(cart: &PyCart, logistic: &PyLogistic, row: Vec<f64>) -> PyResult<(&'static str, f64, String)> {
    let e = EnsembleModel::new(vec![&cart.inner, &logistic.inner], TiePolicy::PreferA).py()?;
    let p = e.predict(&row).py()?;
    Ok((p.label.as_str(), p.confidence, p.member))
}

fn rate_dict<'py>(py: Python<'py>, r: &RateReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (name, ratio) in r.rows() {
        d.set_item(name, ratio.map(|q| q.value()))?;
    }
    Ok(d)
}

/// Confusion matrix `[[TP, FN], [FP, TN]]` from parallel label lists.
#[pyfunction]
fn confusion(actual: Vec<String>, predicted: Vec<String>) -> PyResult<[[u64; 2]; 2]> {
    if actual.len() != predicted.len() {
        return Err(PyValueError::new_err("actual and predicted differ in length"));
    }
    let pairs = actual
        .iter()
        .zip(&predicted)
        .map(|(a, p)| Ok((label(a)?, label(p)?)))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(evaluation::confusion(pairs).py()?.counts)
}

/// Overall error, predicted-column FN/FP rates, sensitivity and specificity.
/// Undefined rates are `None`.
#[pyfunction]
fn rates<'py>(py: Python<'py>, matrix: [[u64; 2]; 2]) -> PyResult<Bound<'py, PyDict>> {
    let r = evaluation::rates(&ConfusionMatrix::from_counts(matrix)).py()?;
    rate_dict(py, &r)
}

#[pyclass(name = "Bundle", module = "histoensemble", frozen)]
pub struct PyBundle {
    inner: ModelBundle,
}

#[pymethods]
impl PyBundle {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: store::load_bundle_path(path).py()? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: store::load_bundle(text.as_bytes()).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        store::save_bundle_path(&self.inner, path).py()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[getter]
    fn schema(&self) -> Vec<String> {
        self.inner.schema.clone()
    }

    #[getter]
    fn cart(&self) -> PyCart {
        PyCart { inner: self.inner.cart.clone() }
    }

    #[getter]
    fn logistic(&self) -> PyLogistic {
        PyLogistic { inner: self.inner.logistic.clone() }
    }

    /// Ensemble predictions for raw records: `(id, label, confidence, member)`.
    fn predict(&self, raw: &PyDataset) -> PyResult<Vec<(String, &'static str, f64, String)>> {
        let prepared = self.inner.prepare(&raw.inner).py()?;
        let preds = self.inner.ensemble().py()?.evaluate(&prepared).py()?;
        Ok(preds
            .into_iter()
            .map(|p| (p.id, p.prediction.label.as_str(), p.prediction.confidence, p.prediction.member))
            .collect())
    }

    /// Confusion matrices of CART, logistic and the ensemble on raw records.
    fn evaluate<'py>(&self, py: Python<'py>, raw: &PyDataset) -> PyResult<Bound<'py, PyDict>> {
        let prepared = self.inner.prepare(&raw.inner).py()?;
        evaluations(py, &pipeline::evaluate_bundle(&self.inner, &prepared).py()?)
    }
}

fn evaluations<'py>(py: Python<'py>, evals: &[ModelEvaluation]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for e in evals {
        let m = PyDict::new(py);
        m.set_item("confusion", e.confusion.counts)?;
        m.set_item("rates", rate_dict(py, &e.rates)?)?;
        d.set_item(&e.name, m)?;
    }
    Ok(d)
}

/// Runs the full pipeline for one seed. Writes reports when `out` is given.
/// Returns a dict with `models` (per-model confusion and rates), `rules`,
/// `comparison`, `selected` and `bundle`.
#[pyfunction]
#[pyo3(signature = (input, seed = 1, train_count = 448, tau = 0.65, cluster_feature = false, out = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    input: PathBuf,
    seed: u64,
    train_count: usize,
    tau: f64,
    cluster_feature: bool,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = PipelineConfig { input, seed, train_count, tau, cluster_feature, ..PipelineConfig::default() };
    let ds = data::load_wdbc_path(&cfg.input).py()?;
    let r = pipeline::run_experiment(&cfg, &ds).py()?;
    if let Some(dir) = out {
        pipeline::write_experiment(&r, &dir).py()?;
    }
    let d = PyDict::new(py);
    d.set_item("models", evaluations(py, &[r.cart, r.logistic, r.ensemble])?)?;
    d.set_item("rules", r.rules)?;
    d.set_item("comparison", r.comparison.text)?;
    d.set_item("selected", r.prepared.selected)?;
    d.set_item("bundle", Bound::new(py, PyBundle { inner: r.bundle })?)?;
    Ok(d)
}

#[pymodule(name = "histoensemble")]
pub fn histoensemble_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyMinMaxScaler>()?;
    m.add_class::<PyKMeans>()?;
    m.add_class::<PyCart>()?;
    m.add_class::<PyLogistic>()?;
    m.add_class::<PyBundle>()?;
    m.add_function(wrap_pyfunction!(compute_stats, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(normality_screen, m)?)?;
    m.add_function(wrap_pyfunction!(recommend_drops, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_predict, m)?)?;
    m.add_function(wrap_pyfunction!(confusion, m)?)?;
    m.add_function(wrap_pyfunction!(rates, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
