//! Model registry and request-level prediction shared by the CLI and the
//! HTTP service.

use std::fmt;
use std::path::Path;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::dataset::{aggregate_responses, Granularity};
use crate::error::{Error, Result};
use crate::linear::LinearModel;
use crate::paper_models::{builtin_model, PaperModelId};
use crate::predictor::{FeatureMap, Predictor};
use crate::schema::{GradeBounds, QuestionnaireSchema, VariableId};
use crate::tree::{ModelTree, TreeNode};

/// Prefix of ids of models loaded from files.
pub const CUSTOM_PREFIX: &str = "custom:";

/// Either kind of trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Tree(ModelTree),
}

impl Model {
    /// Parses a model file; objects with a `root` key are trees.
    pub fn from_json(s: &str) -> Result<Model> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        let object = value.as_object().ok_or_else(|| Error::Json("model must be a JSON object".into()))?;
        if object.contains_key("root") {
            Ok(Model::Tree(ModelTree::from_json(s)?))
        } else {
            Ok(Model::Linear(LinearModel::from_json(s)?))
        }
    }

    pub fn load(path: &Path) -> Result<Model> {
        Model::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        match self {
            Model::Linear(m) => m.to_json(),
            Model::Tree(t) => t.to_json(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        match self {
            Model::Linear(m) => serde_json::to_string_pretty(m).expect("model serializes"),
            Model::Tree(t) => t.to_json_pretty(),
        }
    }

    /// Every feature the model reads, in first-use order.
    pub fn feature_names(&self) -> Vec<String> {
        match self {
            Model::Linear(m) => m.coefficients.keys().cloned().collect(),
            Model::Tree(t) => {
                let mut names = IndexSet::new();
                collect_features(&t.root, &mut names);
                names.into_iter().collect()
            }
        }
    }

    pub fn granularity(&self) -> Granularity {
        Granularity::of_features(&self.feature_names())
    }
}

fn collect_features(node: &TreeNode, out: &mut IndexSet<String>) {
    if let TreeNode::Split { feature, left, right, .. } = node {
        out.insert(feature.clone());
        collect_features(left, out);
        collect_features(right, out);
    }
    out.extend(node.model().coefficients.keys().cloned());
}

impl Predictor for Model {
    fn predict(&self, features: &FeatureMap) -> Result<f64> {
        match self {
            Model::Linear(m) => m.predict(features),
            Model::Tree(t) => t.predict(features),
        }
    }
}

/// Public listing entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub id: String,
    pub granularity: Granularity,
    pub description: String,
}

#[derive(Debug, Clone)]
struct Entry {
    info: ModelInfo,
    model: Model,
    listed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub model: String,
    /// Raw scale values keyed by variable id.
    pub responses: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub raw: f64,
    pub clamped: f64,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_values: Option<IndexMap<String, f64>>,
}

/// Request problems, each list in schema order (unknown keys in request
/// order).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub missing: Vec<String>,
    pub out_of_scale: Vec<String>,
    pub unknown: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.out_of_scale.is_empty() && self.unknown.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (label, list) in [("missing", &self.missing), ("out of scale", &self.out_of_scale), ("unknown", &self.unknown)] {
            if !list.is_empty() {
                parts.push(format!("{label}: {}", list.join(", ")));
            }
        }
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictError {
    UnknownModel(String),
    Invalid(ValidationReport),
    Failed(Error),
}

impl fmt::Display for PredictError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictError::UnknownModel(id) => write!(f, "unknown model `{id}`"),
            PredictError::Invalid(r) => write!(f, "invalid responses ({r})"),
            PredictError::Failed(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PredictError {}

/// Read-only set of models addressable by id.
#[derive(Debug, Clone)]
pub struct Registry {
    schema: QuestionnaireSchema,
    bounds: GradeBounds,
    entries: Vec<Entry>,
}

impl Registry {
    /// The published models. Only the four final ones are listed; the first
    /// refinements stay addressable by id.
    pub fn builtin(schema: QuestionnaireSchema) -> Registry {
        let entries = PaperModelId::ALL
            .into_iter()
            .map(|id| Entry {
                info: ModelInfo {
                    id: id.as_str().to_string(),
                    granularity: id.granularity(),
                    description: id.description().to_string(),
                },
                model: Model::Linear(builtin_model(id)),
                listed: PaperModelId::FINAL.contains(&id),
            })
            .collect();
        Registry { schema, bounds: GradeBounds::default(), entries }
    }

    pub fn with_bounds(mut self, bounds: GradeBounds) -> Registry {
        self.bounds = bounds;
        self
    }

    pub fn schema(&self) -> &QuestionnaireSchema {
        &self.schema
    }

    pub fn bounds(&self) -> &GradeBounds {
        &self.bounds
    }

    /// Adds `model` as `custom:<name>` and returns the id. Re-registering a
    /// name replaces the earlier model.
    pub fn register_custom(&mut self, name: &str, model: Model) -> String {
        let id = format!("{CUSTOM_PREFIX}{name}");
        let kind = match &model {
            Model::Linear(_) => "linear model",
            Model::Tree(_) => "model tree",
        };
        let entry = Entry {
            info: ModelInfo { id: id.clone(), granularity: model.granularity(), description: format!("Custom {kind} `{name}`") },
            model,
            listed: true,
        };
        match self.entries.iter_mut().find(|e| e.info.id == id) {
            Some(existing) => *existing = entry,
            None => self.entries.push(entry),
        }
        id
    }

    /// Loads a model file and registers it under its file stem.
    pub fn register_file(&mut self, path: &Path) -> Result<String> {
        let model = Model::load(path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Io(format!("bad model path {}", path.display())))?;
        Ok(self.register_custom(stem, model))
    }

    pub fn list(&self) -> Vec<ModelInfo> {
        self.entries.iter().filter(|e| e.listed).map(|e| e.info.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<(&ModelInfo, &Model)> {
        self.entries.iter().find(|e| e.info.id == id).map(|e| (&e.info, &e.model))
    }

    /// Codes raw responses onto the scale, aggregates them for factor models
    /// and predicts.
    ///
    /// Variable and factor models need all 70 variables on the response
    /// scale. Models over other features take the responses as given.
    pub fn predict(&self, req: &PredictRequest) -> std::result::Result<PredictResponse, PredictError> {
        let (info, model) = self.get(&req.model).ok_or_else(|| PredictError::UnknownModel(req.model.clone()))?;
        let mut factor_values = None;
        let features = match info.granularity {
            Granularity::Variable | Granularity::Factor => {
                let coded = self.code_responses(&req.responses).map_err(PredictError::Invalid)?;
                if info.granularity == Granularity::Factor {
                    let factors = aggregate_responses(&coded, &self.schema).map_err(PredictError::Failed)?;
                    factor_values = Some(factors.clone());
                    factors
                } else {
                    coded
                }
            }
            Granularity::Custom => req.responses.clone(),
        };
        let raw = model.predict(&features).map_err(|e| match e {
            Error::MissingFeature(name) => {
                PredictError::Invalid(ValidationReport { missing: vec![name], ..ValidationReport::default() })
            }
            other => PredictError::Failed(other),
        })?;
        Ok(PredictResponse { raw, clamped: self.bounds.clamp(raw), model: info.id.clone(), factor_values })
    }

    /// Validates a complete raw response set and returns the coded values in
    /// schema order.
    pub fn code_responses(&self, responses: &IndexMap<String, f64>) -> std::result::Result<FeatureMap, ValidationReport> {
        let mut report = ValidationReport::default();
        let mut coded = FeatureMap::new();
        for id in VariableId::all() {
            let name = id.to_string();
            match responses.get(&name) {
                None => report.missing.push(name),
                Some(&raw) => match self.schema.scale.code(raw) {
                    Some(c) => {
                        coded.insert(name, c);
                    }
                    None => report.out_of_scale.push(name),
                },
            }
        }
        report.unknown = responses.keys().filter(|k| k.parse::<VariableId>().is_err()).cloned().collect();
        if report.is_empty() {
            Ok(coded)
        } else {
            Err(report)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::aggregate_factors;
    use crate::dataset::Dataset;
    use crate::schema::builtin_schema;

    fn uniform(value: f64) -> IndexMap<String, f64> {
        VariableId::all().map(|id| (id.to_string(), value)).collect()
    }

    fn request(model: &str, responses: IndexMap<String, f64>) -> PredictRequest {
        PredictRequest { model: model.into(), responses }
    }

    #[test]
    fn lists_four_final_models() {
        let r = Registry::builtin(builtin_schema());
        let ids: Vec<String> = r.list().into_iter().map(|m| m.id).collect();
        assert_eq!(ids, ["lrc_variable", "lrc_factor", "m5p_variable_final", "m5p_factor_final"]);
        assert!(r.get("m5p_factor_first").is_some());
    }

    #[test]
    fn scale_minimum_gives_intercept() {
        let r = Registry::builtin(builtin_schema());
        let resp = r.predict(&request("lrc_variable", uniform(1.0))).unwrap();
        assert_eq!(resp.raw, 9.8865);
        assert_eq!(resp.clamped, 7.0);
        assert!(resp.factor_values.is_none());
        let resp = r.predict(&request("m5p_factor_final", uniform(1.0))).unwrap();
        assert_eq!(resp.raw, 4.0297);
    }

    #[test]
    fn factor_values_match_dataset_aggregation() {
        let schema = builtin_schema();
        let r = Registry::builtin(schema.clone());
        let responses: IndexMap<String, f64> =
            VariableId::all().map(|id| (id.to_string(), (1 + id.index() % 5) as f64)).collect();
        let resp = r.predict(&request("lrc_factor", responses.clone())).unwrap();
        let coded: Vec<f64> = responses.values().map(|v| v - 1.0).collect();
        let d = Dataset::new(schema.variable_names(), vec![coded], vec![5.0]).unwrap();
        let agg = aggregate_factors(&d, &schema).unwrap();
        let expected: IndexMap<String, f64> = agg.features_of(0);
        assert_eq!(resp.factor_values.unwrap(), expected);
    }

    #[test]
    fn validation_lists() {
        let r = Registry::builtin(builtin_schema());
        let mut responses = uniform(3.0);
        responses.shift_remove("x41");
        responses.insert("x5".into(), 9.0);
        responses.insert("x7".into(), 2.5);
        responses.insert("age".into(), 20.0);
        match r.predict(&request("lrc_variable", responses)) {
            Err(PredictError::Invalid(report)) => {
                assert_eq!(report.missing, ["x41"]);
                assert_eq!(report.out_of_scale, ["x5", "x7"]);
                assert_eq!(report.unknown, ["age"]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            r.predict(&request("nope", uniform(1.0))).unwrap_err(),
            PredictError::UnknownModel("nope".into())
        );
    }

    #[test]
    fn custom_models() {
        let mut r = Registry::builtin(builtin_schema());
        let id = r.register_custom("line", Model::Linear(LinearModel::from_terms(1.0, [("x", 2.0)])));
        assert_eq!(id, "custom:line");
        let info = r.list().pop().unwrap();
        assert_eq!((info.id.as_str(), info.granularity), ("custom:line", Granularity::Custom));
        let resp = r.predict(&request(&id, [("x".to_string(), 3.0)].into_iter().collect())).unwrap();
        assert_eq!(resp.raw, 7.0);
        assert!(matches!(r.predict(&request(&id, IndexMap::new())), Err(PredictError::Invalid(_))));
    }

    #[test]
    fn model_json_dispatch() {
        let linear = LinearModel::from_terms(1.0, [("x3", 2.0)]);
        let parsed = Model::from_json(&linear.to_json()).unwrap();
        assert_eq!(parsed, Model::Linear(linear));
        assert_eq!(parsed.granularity(), Granularity::Variable);
        assert!(Model::from_json("[1]").is_err());
    }
}
