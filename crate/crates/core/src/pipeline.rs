//! End-to-end experiment: split, EDA, scaling, correlation pruning, k-means,
//! CART + logistic training, ensemble evaluation, and report writing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cart::CartModel;
use crate::config::PipelineConfig;
use crate::data::{select_features, train_test_split, DataSplit, Dataset};
use crate::ensemble::{evaluate_member, EvaluatedPrediction, TiePolicy};
use crate::error::{Error, Result};
use crate::evaluation::{compare_models, confusion, rates, ComparisonTable, ConfusionMatrix, RateReport};
use crate::kmeans::{attach_cluster_feature, cluster_purity, feature_importance, ClusterImportance, ClusterPurity, KMeansModel};
use crate::logistic::LogisticModel;
use crate::scaler::MinMaxScaler;
use crate::stats::{correlation_matrix, eda_report, recommend_drops, CorrelationMatrix, DropRecommendation, EdaReport};
use crate::store::{ModelBundle, Provenance, FORMAT_VERSION};

#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub model: KMeansModel,
    pub purity: Vec<ClusterPurity>,
    pub importance: ClusterImportance,
}

/// Split and preprocessing results, up to (not including) model training.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: DataSplit,
    pub scaler: Option<MinMaxScaler>,
    pub correlation: CorrelationMatrix,
    pub drops: DropRecommendation,
    pub selected: Vec<String>,
    pub cluster: Option<ClusterReport>,
    /// Model-ready partitions.
    pub train: Dataset,
    pub test: Dataset,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

pub fn prepare(cfg: &PipelineConfig, ds: &Dataset) -> Result<Prepared> {
    let split = stage("split", train_test_split(ds, cfg.train_count, cfg.seed))?;
    let (scaler, train, test) = if cfg.scale {
        let s = stage("scale", MinMaxScaler::fit(&split.train))?;
        let train = stage("scale", s.transform(&split.train))?;
        let test = stage("scale", s.transform(&split.test))?;
        (Some(s), train, test)
    } else {
        (None, split.train.clone(), split.test.clone())
    };

    let correlation = stage("correlation", correlation_matrix(&train))?;
    let drops = stage("correlation", recommend_drops(&correlation, &cfg.pivot, cfg.tau))?;
    let selected: Vec<String> = drops.retained(correlation.names()).into_iter().map(String::from).collect();
    let train = stage("correlation", select_features(&train, &selected))?;
    let test = stage("correlation", select_features(&test, &selected))?;

    // k-means needs [0, 1] inputs, so it only runs on scaled data.
    let cluster = if cfg.scale {
        let model = stage("cluster", KMeansModel::fit(&train, cfg.seed, &cfg.kmeans))?;
        let purity = stage("cluster", cluster_purity(&model, &train))?;
        let importance = stage("cluster", feature_importance(&model, &train))?;
        Some(ClusterReport { model, purity, importance })
    } else if cfg.cluster_feature {
        return Err(Error::InvalidArgument("the cluster feature requires scaling".into()).in_stage("cluster"));
    } else {
        None
    };
    let (train, test) = match (&cluster, cfg.cluster_feature) {
        (Some(c), true) => (
            stage("cluster", attach_cluster_feature(&train, &c.model))?,
            stage("cluster", attach_cluster_feature(&test, &c.model))?,
        ),
        _ => (train, test),
    };
    Ok(Prepared { split, scaler, correlation, drops, selected, cluster, train, test })
}

#[derive(Debug, Clone)]
pub struct ModelEvaluation {
    pub name: String,
    pub predictions: Vec<EvaluatedPrediction>,
    pub confusion: ConfusionMatrix,
    pub rates: RateReport,
}

impl ModelEvaluation {
    pub fn from_predictions(name: &str, predictions: Vec<EvaluatedPrediction>) -> Result<Self> {
        let cm = confusion(predictions.iter().map(|p| (p.actual, p.prediction.label)))?;
        Ok(Self { name: name.to_string(), rates: rates(&cm)?, confusion: cm, predictions })
    }

    pub fn predictions_csv(&self) -> String {
        let mut out = String::from("id,actual,predicted,confidence,winning_member\n");
        for p in &self.predictions {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.id, p.actual, p.prediction.label, p.prediction.confidence, p.prediction.member
            );
        }
        out
    }
}

/// Evaluates CART, logistic and the ensemble of a bundle on a model-ready test set.
pub fn evaluate_bundle(bundle: &ModelBundle, test: &Dataset) -> Result<[ModelEvaluation; 3]> {
    let cart = ModelEvaluation::from_predictions("cart", evaluate_member(&bundle.cart, test)?)?;
    let logit = ModelEvaluation::from_predictions("logistic", evaluate_member(&bundle.logistic, test)?)?;
    let ens = ModelEvaluation::from_predictions("ensemble", bundle.ensemble()?.evaluate(test)?)?;
    Ok([cart, logit, ens])
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub seed: u64,
    pub eda: EdaReport,
    pub prepared: Prepared,
    pub bundle: ModelBundle,
    pub cart: ModelEvaluation,
    pub logistic: ModelEvaluation,
    pub ensemble: ModelEvaluation,
    pub comparison: ComparisonTable,
    pub rules: String,
}

pub fn train_bundle(cfg: &PipelineConfig, prepared: &Prepared) -> Result<ModelBundle> {
    let cart = stage("train", CartModel::train(&prepared.train, cfg.cart))?;
    let logistic = stage("train", LogisticModel::fit(&prepared.train, cfg.logistic))?;
    let bundle = ModelBundle {
        format_version: FORMAT_VERSION,
        input_schema: prepared.split.train.schema().to_vec(),
        selected_features: prepared.selected.clone(),
        schema: prepared.train.schema().to_vec(),
        scaler: prepared.scaler.clone(),
        kmeans: if cfg.cluster_feature { prepared.cluster.as_ref().map(|c| c.model.clone()) } else { None },
        cart,
        logistic,
        tie_policy: TiePolicy::PreferA,
        provenance: Provenance {
            seed: cfg.seed,
            train_count: cfg.train_count,
            split_method: prepared.split.method,
            created_unix: cfg.created_unix,
        },
    };
    stage("train", bundle.validate())?;
    Ok(bundle)
}

pub fn run_experiment(cfg: &PipelineConfig, ds: &Dataset) -> Result<ExperimentReport> {
    let prepared = prepare(cfg, ds)?;
    let eda = stage("eda", eda_report(ds, cfg.outlier_z, cfg.normality_bound))?;
    let bundle = train_bundle(cfg, &prepared)?;
    let [cart, logistic, ensemble] = stage("evaluate", evaluate_bundle(&bundle, &prepared.test))?;
    let comparison = stage(
        "evaluate",
        compare_models(&[
            ("CART".to_string(), cart.rates),
            ("Logistic".to_string(), logistic.rates),
            ("Ensemble".to_string(), ensemble.rates),
        ]),
    )?;
    let rules = bundle.cart.rules();
    Ok(ExperimentReport { seed: cfg.seed, eda, prepared, bundle, cart, logistic, ensemble, comparison, rules })
}

/// Runs one experiment per seed, in seed order.
pub fn run_batch(cfg: &PipelineConfig, ds: &Dataset, seeds: &[u64]) -> Result<Vec<ExperimentReport>> {
    seeds
        .iter()
        .map(|&seed| run_experiment(&PipelineConfig { seed, ..cfg.clone() }, ds))
        .collect()
}

pub fn summary_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from("seed");
    for m in ["cart", "logistic", "ensemble"] {
        let _ = write!(out, ",{m}_errors,{m}_fn,{m}_fp,{m}_overall_error");
    }
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{}", r.seed);
        for e in [&r.cart, &r.logistic, &r.ensemble] {
            let c = &e.confusion;
            let _ = write!(out, ",{},{},{},{}", c.errors(), c.fn_count(), c.fp(), e.rates.overall_error.value());
        }
        out.push('\n');
    }
    out
}

// ---- CSV emitters ---------------------------------------------------------

pub fn stats_csv(eda: &EdaReport) -> String {
    let mut out = String::from("feature,mean,std,min,max,skew,kurt,pass\n");
    for (name, st) in &eda.stats {
        let pass = eda.normality.get(name).is_some_and(|e| e.pass);
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".into(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{},{pass}",
            st.mean,
            st.std,
            st.min,
            st.max,
            opt(st.skewness),
            opt(st.kurtosis)
        );
    }
    out
}

pub fn outliers_csv(eda: &EdaReport) -> String {
    let mut out = String::from("id,feature,value,z\n");
    for e in &eda.outliers.entries {
        let _ = writeln!(out, "{},{},{},{}", e.id, e.feature, e.value, e.z);
    }
    out
}

pub fn correlation_csv(cm: &CorrelationMatrix) -> String {
    let mut out = String::from("feature");
    for n in cm.names() {
        let _ = write!(out, ",{n}");
    }
    out.push('\n');
    for (n, row) in cm.names().iter().zip(cm.values()) {
        out.push_str(n);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn drops_csv(d: &DropRecommendation) -> String {
    let mut out = String::from("feature,abs_r\n");
    for (n, r) in &d.dropped {
        let _ = writeln!(out, "{n},{r}");
    }
    out
}

pub fn centroids_csv(m: &KMeansModel) -> String {
    let mut out = String::from("cluster");
    for f in &m.features {
        let _ = write!(out, ",{f}");
    }
    out.push('\n');
    for (c, row) in m.centroids.iter().enumerate() {
        let _ = write!(out, "{c}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn purity_csv(p: &[ClusterPurity]) -> String {
    let mut out = String::from("cluster,count_A,count_N,share_A,share_N\n");
    for c in p {
        let _ = writeln!(out, "{},{},{},{},{}", c.cluster, c.count_a, c.count_n, c.share_a, c.share_n);
    }
    out
}

pub fn importance_csv(imp: &ClusterImportance) -> String {
    let mut out = String::from("feature,share\n");
    for (f, s) in &imp.shares {
        let _ = writeln!(out, "{f},{s}");
    }
    out
}

/// Header `id,diagnosis,<features>`.
pub fn dataset_csv(ds: &Dataset) -> String {
    let mut out = String::from("id,diagnosis");
    for f in ds.schema() {
        let _ = write!(out, ",{f}");
    }
    out.push('\n');
    for s in ds.samples() {
        let _ = write!(out, "{},{}", s.id, s.diagnosis);
        for v in &s.features {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

pub fn write_eda(eda: &EdaReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("histograms"))?;
    write(dir, "stats.csv", &stats_csv(eda))?;
    write(dir, "outliers.csv", &outliers_csv(eda))?;
    write(dir, "correlation.csv", &correlation_csv(&eda.correlation))?;
    for (name, bins) in &eda.histograms {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for b in bins {
            let _ = writeln!(out, "{},{},{}", b.lo, b.hi, b.count);
        }
        write(&dir.join("histograms"), &format!("{name}.csv"), &out)?;
    }
    Ok(())
}

pub fn write_cluster(c: &ClusterReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write(dir, "centroids.csv", &centroids_csv(&c.model))?;
    write(dir, "purity.csv", &purity_csv(&c.purity))?;
    write(dir, "importance.csv", &importance_csv(&c.importance))
}

pub fn write_evaluation(e: &ModelEvaluation, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write(dir, &format!("confusion_{}.csv", e.name), &e.confusion.to_csv())?;
    write(dir, &format!("rates_{}.csv", e.name), &e.rates.to_csv())?;
    write(dir, &format!("predictions_{}.csv", e.name), &e.predictions_csv())
}

pub fn write_comparison(t: &ComparisonTable, dir: &Path) -> Result<()> {
    write(dir, "comparison.txt", &t.text)?;
    write(dir, "comparison.csv", &t.csv)
}

/// Writes every artifact of one experiment into `dir`.
pub fn write_experiment(r: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_eda(&r.eda, &dir.join("eda"))?;
    write(dir, "drops.csv", &drops_csv(&r.prepared.drops))?;
    if let Some(c) = &r.prepared.cluster {
        write_cluster(c, &dir.join("cluster"))?;
    }
    for e in [&r.cart, &r.logistic, &r.ensemble] {
        write_evaluation(e, dir)?;
    }
    write_comparison(&r.comparison, dir)?;
    write(dir, "rules.txt", &r.rules)?;
    crate::store::save_bundle_path(&r.bundle, dir.join("bundle.json"))
}
