//! The published predictive models as fixed linear models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Granularity;
use crate::error::{Error, Result};
use crate::linear::{predict_linear, LinearModel};
use crate::predictor::FeatureMap;
use crate::schema::GradeBounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaperModelId {
    LrcVariable,
    LrcFactor,
    M5pVariableFinal,
    M5pFactorFinal,
    M5pVariableFirst,
    M5pFactorFirst,
}

impl PaperModelId {
    pub const ALL: [PaperModelId; 6] = [
        PaperModelId::LrcVariable,
        PaperModelId::LrcFactor,
        PaperModelId::M5pVariableFinal,
        PaperModelId::M5pFactorFinal,
        PaperModelId::M5pVariableFirst,
        PaperModelId::M5pFactorFirst,
    ];

    /// Models offered for prediction; the "first" refinements are kept for
    /// inspection only.
    pub const FINAL: [PaperModelId; 4] = [
        PaperModelId::LrcVariable,
        PaperModelId::LrcFactor,
        PaperModelId::M5pVariableFinal,
        PaperModelId::M5pFactorFinal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PaperModelId::LrcVariable => "lrc_variable",
            PaperModelId::LrcFactor => "lrc_factor",
            PaperModelId::M5pVariableFinal => "m5p_variable_final",
            PaperModelId::M5pFactorFinal => "m5p_factor_final",
            PaperModelId::M5pVariableFirst => "m5p_variable_first",
            PaperModelId::M5pFactorFirst => "m5p_factor_first",
        }
    }

    pub fn granularity(self) -> Granularity {
        match self {
            PaperModelId::LrcVariable | PaperModelId::M5pVariableFinal | PaperModelId::M5pVariableFirst => {
                Granularity::Variable
            }
            _ => Granularity::Factor,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PaperModelId::LrcVariable => "Linear regression classifier over the 70 questionnaire variables",
            PaperModelId::LrcFactor => "Linear regression classifier over the 21 aggregated factors",
            PaperModelId::M5pVariableFinal => "M5P model tree, last smoothed linear model, variable inputs",
            PaperModelId::M5pFactorFinal => "M5P model tree, last smoothed linear model, factor inputs",
            PaperModelId::M5pVariableFirst => "M5P model tree, first smoothed linear model, variable inputs",
            PaperModelId::M5pFactorFirst => "M5P model tree, first smoothed linear model, factor inputs",
        }
    }

    fn terms(self) -> (f64, &'static [(&'static str, f64)]) {
        match self {
            PaperModelId::LrcVariable => (9.8865, LRC_VARIABLE),
            PaperModelId::LrcFactor => (5.6703, LRC_FACTOR),
            PaperModelId::M5pVariableFinal => (5.9906, M5P_VARIABLE_FINAL),
            PaperModelId::M5pFactorFinal => (4.0297, M5P_FACTOR_FINAL),
            PaperModelId::M5pVariableFirst => (3.9539, M5P_VARIABLE_FIRST),
            PaperModelId::M5pFactorFirst => (5.0805, M5P_FACTOR_FIRST),
        }
    }
}

impl fmt::Display for PaperModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PaperModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PaperModelId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

const LRC_VARIABLE: &[(&str, f64)] = &[
    ("x1", 0.0444),
    ("x2", 0.3166),
    ("x3", 0.0746),
    ("x4", -0.0415),
    ("x5", -0.239),
    ("x6", 0.3153),
    ("x7", -0.1467),
    ("x8", 0.3464),
    ("x9", 0.6227),
    ("x11", -0.1404),
    ("x12", -0.3228),
    ("x13", 0.1179),
    ("x14", -0.4613),
    ("x15", -0.3948),
    ("x16", 0.4249),
    ("x17", -0.2241),
    ("x18", -0.1389),
    ("x19", 0.2025),
    ("x20", 0.0664),
    ("x21", 0.133),
    ("x22", 0.1745),
    ("x23", -0.3222),
    ("x24", -0.3334),
    ("x25", -0.2479),
    ("x26", -0.1623),
    ("x28", 0.0665),
    ("x29", -0.2556),
    ("x30", 0.2829),
    ("x31", -0.2215),
    ("x33", -0.4575),
    ("x34", 0.135),
    ("x35", 0.3312),
    ("x36", -0.2152),
    ("x37", 0.2407),
    ("x38", 0.1757),
    ("x39", -0.2986),
    ("x40", 0.1768),
    ("x41", -0.2375),
    ("x42", -0.1969),
    ("x43", 0.2352),
    ("x44", -0.098),
    ("x45", 0.4561),
    ("x46", -0.136),
    ("x47", -0.387),
    ("x48", 0.1525),
    ("x49", -0.2215),
    ("x50", 0.0481),
    ("x51", 0.1292),
    ("x52", 0.1508),
    ("x53", 0.4368),
    ("x54", -0.3313),
    ("x55", -0.1794),
    ("x56", -0.0523),
    ("x57", -0.3505),
    ("x58", 0.4718),
    ("x59", 0.269),
    ("x60", 0.086),
    ("x61", -0.3004),
    ("x62", -0.444),
    ("x63", 0.3544),
    ("x64", -0.2301),
    ("x65", -0.538),
    ("x66", 0.0899),
    ("x67", 0.2394),
    ("x68", -0.0681),
    ("x69", -0.1007),
    ("x70", -0.3858),
];

const LRC_FACTOR: &[(&str, f64)] = &[
    ("sf", -0.074),
    ("satd", 0.0942),
    ("sat", 0.065),
    ("lat", 0.0449),
    ("lcs", -0.0448),
    ("la", -0.0407),
    ("oh", 0.0493),
    ("oe", 0.0814),
    ("uf", -0.0792),
    ("fi", 0.0621),
    ("fs", -0.0663),
    ("fpe", -0.0533),
    ("fpg", -0.1233),
];

const M5P_VARIABLE_FIRST: &[(&str, f64)] = &[
    ("x1", 0.0297),
    ("x4", 0.0187),
    ("x5", -0.0376),
    ("x9", 0.1263),
    ("x12", -0.017),
    ("x14", -0.0826),
    ("x15", 0.021),
    ("x19", 0.0316),
    ("x22", -0.0209),
    ("x57", 0.0389),
    ("x59", 0.0211),
    ("x65", -0.0343),
    ("x69", -0.0217),
];

const M5P_VARIABLE_FINAL: &[(&str, f64)] = &[
    ("x1", 0.0155),
    ("x4", 0.0098),
    ("x5", -0.0652),
    ("x7", 0.0552),
    ("x9", 0.1046),
    ("x12", -0.0089),
    ("x14", -0.0143),
    ("x15", 0.011),
    ("x19", -0.0503),
    ("x22", -0.1112),
    ("x29", 0.032),
    ("x33", -0.0288),
    ("x59", 0.0324),
    ("x65", -0.06),
    ("x69", -0.188),
];

const M5P_FACTOR_FIRST: &[(&str, f64)] = &[
    ("ssh", 0.0481),
    ("sf", 0.1057),
    ("satd", 0.0343),
    ("sat", 0.0084),
    ("st", -0.0083),
    ("lat", 0.0127),
    ("lcs", 0.0475),
    ("la", -0.1963),
    ("oe", 0.0141),
    ("ucp", 0.0232),
    ("fs", -0.0248),
    ("fpe", -0.0097),
    ("fpg", -0.0293),
];

const M5P_FACTOR_FINAL: &[(&str, f64)] = &[
    ("sf", -0.0144),
    ("satd", 0.0307),
    ("sat", 0.0106),
    ("st", -0.0101),
    ("lat", 0.0045),
    ("lcs", -0.0548),
    ("ld", 0.0202),
    ("oe", 0.0273),
    ("ob", 0.0675),
    ("ult", -0.0159),
    ("fs", -0.0466),
    ("fpe", -0.0034),
    ("fpg", -0.0321),
];

pub fn builtin_model(id: PaperModelId) -> LinearModel {
    let (intercept, terms) = id.terms();
    LinearModel::from_terms(intercept, terms.iter().copied())
}

/// A prediction with its display value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradePrediction {
    pub raw: f64,
    /// `raw` clamped to the grade bounds.
    pub clamped: f64,
}

pub fn predict_paper(id: PaperModelId, responses: &FeatureMap) -> Result<GradePrediction> {
    predict_paper_with(id, responses, &GradeBounds::default())
}

pub fn predict_paper_with(id: PaperModelId, responses: &FeatureMap, bounds: &GradeBounds) -> Result<GradePrediction> {
    let raw = predict_linear(&builtin_model(id), responses)?;
    Ok(GradePrediction { raw, clamped: bounds.clamp(raw) })
}

/// Features of a linear model split by coefficient sign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    /// In the universe but absent from the model (or with a zero coefficient).
    pub insignificant: Vec<String>,
}

/// Partitions `universe` by the sign of each feature's coefficient. Lists
/// keep the universe order.
pub fn classify_significance<S: AsRef<str>>(m: &LinearModel, universe: &[S]) -> SignificanceReport {
    let mut report = SignificanceReport { positive: Vec::new(), negative: Vec::new(), insignificant: Vec::new() };
    for name in universe {
        let name = name.as_ref().to_string();
        match m.coefficients.get(&name).copied() {
            Some(c) if c > 0.0 => report.positive.push(name),
            Some(c) if c < 0.0 => report.negative.push(name),
            _ => report.insignificant.push(name),
        }
    }
    report
}

/// SHA-256 over the model's terms, one `name=value` line per coefficient in
/// name-sorted order followed by `intercept=value`. Values use Rust's
/// shortest round-trip formatting.
pub fn model_digest(m: &LinearModel) -> String {
    let mut terms: Vec<(&String, &f64)> = m.coefficients.iter().collect();
    terms.sort_by(|a, b| a.0.cmp(b.0));
    let mut hasher = Sha256::new();
    for (name, value) in terms {
        hasher.update(format!("{name}={value}\n"));
    }
    hasher.update(format!("intercept={}\n", m.intercept));
    hex::encode(hasher.finalize())
}
