//! Pipeline configuration. Every default lives in [`defaults`].

use std::path::PathBuf;

use crate::cart::CartParams;
use crate::kmeans::KMeansParams;
use crate::logistic::LogisticFitParams;

pub mod defaults {
    pub const TRAIN_COUNT: usize = 448;
    pub const SEED: u64 = 1;
    pub const PIVOT: &str = "radius";
    pub const TAU: f64 = 0.65;
    pub const OUTLIER_Z: f64 = 4.0;
    pub const NORMALITY_BOUND: f64 = 2.0;
    pub const HISTOGRAM_BINS: usize = 20;

    pub const K: usize = 2;
    pub const KMEANS_RESTARTS: usize = 10;
    pub const KMEANS_MAX_ITER: usize = 100;
    pub const KMEANS_TOL: f64 = 1e-6;

    pub const MAX_DEPTH: usize = 5;
    pub const MIN_LEAF: usize = 5;
    pub const MIN_GINI_DECREASE: f64 = 1e-4;

    pub const LOGIT_MAX_ITER: usize = 200;
    pub const LOGIT_GRAD_TOL: f64 = 1e-6;
    pub const L2: f64 = 1e-6;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub seed: u64,
    pub train_count: usize,
    pub pivot: String,
    pub tau: f64,
    pub scale: bool,
    pub cluster_feature: bool,
    pub outlier_z: f64,
    pub normality_bound: f64,
    pub kmeans: KMeansParams,
    pub cart: CartParams,
    pub logistic: LogisticFitParams,
    pub out_dir: Option<PathBuf>,
    /// Bundle creation time; fixed so identical configs give identical bytes.
    pub created_unix: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("wdbc.data"),
            seed: defaults::SEED,
            train_count: defaults::TRAIN_COUNT,
            pivot: defaults::PIVOT.to_string(),
            tau: defaults::TAU,
            scale: true,
            cluster_feature: false,
            outlier_z: defaults::OUTLIER_Z,
            normality_bound: defaults::NORMALITY_BOUND,
            kmeans: KMeansParams {
                k: defaults::K,
                restarts: defaults::KMEANS_RESTARTS,
                max_iter: defaults::KMEANS_MAX_ITER,
                tol: defaults::KMEANS_TOL,
            },
            cart: CartParams {
                max_depth: defaults::MAX_DEPTH,
                min_leaf: defaults::MIN_LEAF,
                min_gini_decrease: defaults::MIN_GINI_DECREASE,
            },
            logistic: LogisticFitParams {
                max_iter: defaults::LOGIT_MAX_ITER,
                grad_tol: defaults::LOGIT_GRAD_TOL,
                l2: defaults::L2,
            },
            out_dir: None,
            created_unix: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_agree_with_module_defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.cart, CartParams::default());
        assert_eq!(c.logistic, LogisticFitParams::default());
        assert_eq!(c.kmeans, KMeansParams::default());
        assert!(c.scale && !c.cluster_feature);
    }
}
