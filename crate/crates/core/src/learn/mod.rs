//! In-repo supervised learning: CART trees, logistic regression,
//! gradient boosting, evaluation metrics, and the versioned model file
//! format.

use thiserror::Error;

pub mod boost;
pub mod io;
pub mod linear;
pub mod metrics;
pub mod tree;

pub use boost::{mean_logloss, train_boosted, BoostOrder, BoostParams, BoostedModel};
pub use io::{load_model, save_model, Model, ModelFile, FORMAT_VERSION};
pub use linear::{train_logreg, LogisticModel, LogisticProblem, LogregParams};
pub use metrics::{
    auc_rank, evaluate, roc_curve, trapezoid_auc, Confusion, EvalReport, RocPoint,
};
pub use tree::{train_tree, Node, Tree, TreeModel, TreeParams};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("optimizer did not converge: gradient norm {grad_norm:e} after {iters} iterations")]
    NonConvergence { grad_norm: f64, iters: usize },
    #[error("feature schema mismatch: model expects {expected} features, row has {got}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("task `{task}` has no positive labels")]
    DegenerateLabels { task: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file has format version {found}, this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("{path}: corrupt model file: {reason}")]
    CorruptModel { path: String, reason: String },
}
