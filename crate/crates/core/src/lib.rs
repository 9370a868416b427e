//! Student-performance prediction from questionnaire responses.
//!
//! Covers the 70-item questionnaire schema, dataset loading and aggregation,
//! ordinary least squares, linear regression classification, M5-style model
//! trees, evaluation metrics and a set of fixed published models.

pub mod dataset;
pub mod error;
pub mod linalg;
pub mod linear;
pub mod lrc;
pub mod metrics;
pub mod paper_models;
pub mod predictor;
pub mod registry;
pub mod schema;
pub mod synthetic;
pub mod tree;

pub use dataset::{
    aggregate_factors, aggregate_responses, load_csv, load_csv_with, normalize, serialize_csv, split_train_test,
    Dataset, Granularity, Normalization, Sample, SplitSpec, TARGET_COLUMN,
};
pub use error::{Error, Result};
pub use linear::{fit_ols, predict_linear, FitDiagnostics, LinearModel};
pub use lrc::{lrc_classify, lrc_fit, ClassLabel, ClassModel, LrcClassifier, LrcState};
pub use metrics::{evaluate, EvaluationReport, PredictionPairs};
pub use paper_models::{
    builtin_model, classify_significance, predict_paper, GradePrediction, PaperModelId, SignificanceReport,
};
pub use predictor::{FeatureMap, Predictor};
pub use registry::{Model, ModelInfo, PredictError, PredictRequest, PredictResponse, Registry, ValidationReport};
pub use schema::{
    builtin_schema, FactorCode, GradeBounds, GradeValue, QuestionnaireSchema, ResponseScale, VariableEntry, VariableId,
};
pub use synthetic::{random_regression, synthesize, SynthSpec};
pub use tree::{build_tree, predict_tree, prune, ModelTree, TreeNode, TreeParams};
