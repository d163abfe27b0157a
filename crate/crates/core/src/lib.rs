//! Cytology-feature classification pipeline: exploratory statistics,
//! min-max scaling, correlation pruning, two-cluster k-means, a Gini CART
//! tree and a logistic regression combined by highest-confidence voting,
//! with confusion-matrix evaluation and a versioned JSON model bundle.

pub mod cart;
pub mod config;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod kmeans;
pub mod logistic;
pub mod pipeline;
pub mod scaler;
pub mod stats;
pub mod store;

pub use cart::{CartModel, CartNode, CartParams};
pub use config::PipelineConfig;
pub use data::{load_wdbc, load_wdbc_path, select_features, train_test_split, DataSplit, Dataset, Diagnosis, Sample};
pub use ensemble::{Classifier, EnsembleModel, ScoredPrediction, TiePolicy};
pub use error::{Error, ErrorKind, Result};
pub use evaluation::{compare_models, confusion, rates, ConfusionMatrix, RateReport, Ratio};
pub use kmeans::{KMeansModel, KMeansParams};
pub use logistic::{LogisticFitParams, LogisticModel};
pub use scaler::MinMaxScaler;
pub use store::{load_bundle, save_bundle, ModelBundle};
