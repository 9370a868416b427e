//! Sparse linear models and their least-squares fit.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{factor_normal_matrix, gram};
use crate::predictor::{FeatureMap, Predictor};

/// `intercept + Σ coefficient·feature` over named features.
///
/// Features absent from `coefficients` contribute nothing; their values are
/// never looked up. Coefficient order is the model's feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinearModel")]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: IndexMap<String, f64>,
}

#[derive(Deserialize)]
struct RawLinearModel {
    intercept: f64,
    #[serde(default)]
    coefficients: IndexMap<String, f64>,
}

impl TryFrom<RawLinearModel> for LinearModel {
    type Error = Error;

    fn try_from(raw: RawLinearModel) -> Result<Self> {
        LinearModel::new(raw.intercept, raw.coefficients)
    }
}

impl LinearModel {
    pub fn new(intercept: f64, coefficients: IndexMap<String, f64>) -> Result<Self> {
        if !intercept.is_finite() || coefficients.values().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(LinearModel { intercept, coefficients })
    }

    pub fn constant(value: f64) -> Self {
        LinearModel { intercept: value, coefficients: IndexMap::new() }
    }

    pub fn from_terms<S: Into<String>>(intercept: f64, terms: impl IntoIterator<Item = (S, f64)>) -> Self {
        LinearModel { intercept, coefficients: terms.into_iter().map(|(n, c)| (n.into(), c)).collect() }
    }

    pub fn feature_order(&self) -> impl Iterator<Item = &str> {
        self.coefficients.keys().map(String::as_str)
    }

    /// Number of fitted parameters, intercept included.
    pub fn num_parameters(&self) -> usize {
        self.coefficients.len() + 1
    }

    /// Resolves coefficients against a column layout for fast row evaluation.
    pub fn bind(&self, feature_names: &[String]) -> Result<BoundModel> {
        let terms = self
            .coefficients
            .iter()
            .map(|(name, &c)| {
                feature_names
                    .iter()
                    .position(|n| n == name)
                    .map(|j| (j, c))
                    .ok_or_else(|| Error::MissingFeature(name.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(BoundModel { intercept: self.intercept, terms })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A [`LinearModel`] with feature names resolved to column indices.
#[derive(Debug, Clone)]
pub struct BoundModel {
    intercept: f64,
    terms: Vec<(usize, f64)>,
}

impl BoundModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.terms.iter().map(|&(j, c)| c * row[j]).sum::<f64>()
    }
}

/// `intercept + Σ coefficient × x[name]`.
pub fn predict_linear(m: &LinearModel, x: &FeatureMap) -> Result<f64> {
    let mut acc = m.intercept;
    for (name, c) in &m.coefficients {
        let v = x.get(name).ok_or_else(|| Error::MissingFeature(name.clone()))?;
        acc += c * v;
    }
    Ok(acc)
}

impl Predictor for LinearModel {
    fn predict(&self, features: &FeatureMap) -> Result<f64> {
        predict_linear(self, features)
    }

    fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        let bound = self.bind(d.feature_names())?;
        Ok(d.rows().iter().map(|r| bound.predict_row(r)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub residual_sum_squares: f64,
    pub rank_deficient: bool,
    pub ridge_used: f64,
}

/// Least-squares fit of the target on `features` plus an intercept.
///
/// Requires at least `features.len() + 1` samples. When the centered normal
/// matrix is singular or badly conditioned a ridge of `1e-8 · trace / p` is
/// added (growing tenfold until it factors) and `rank_deficient` is set.
pub fn fit_ols<S: AsRef<str>>(d: &Dataset, features: &[S]) -> Result<(LinearModel, FitDiagnostics)> {
    let needed = features.len() + 1;
    if d.len() < needed {
        return Err(Error::TooFewSamples { needed, available: d.len() });
    }
    let columns = features
        .iter()
        .map(|f| d.feature_index(f.as_ref()).ok_or_else(|| Error::MissingFeature(f.as_ref().to_string())))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<usize> = (0..d.len()).collect();
    fit_least_squares(d, &rows, &columns)
}

/// Least squares over a row subset and column subset, no sample-count
/// requirement (underdetermined systems fall through to the ridge path).
pub(crate) fn fit_least_squares(d: &Dataset, rows: &[usize], columns: &[usize]) -> Result<(LinearModel, FitDiagnostics)> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = rows.len() as f64;
    let p = columns.len();
    let targets = d.targets();
    let y_mean = rows.iter().map(|&i| targets[i]).sum::<f64>() / n;
    let x_mean: Vec<f64> = columns
        .iter()
        .map(|&j| rows.iter().map(|&i| d.row(i)[j]).sum::<f64>() / n)
        .collect();

    // centered design keeps the intercept out of the normal matrix
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| columns.iter().zip(&x_mean).map(|(&j, m)| d.row(i)[j] - m).collect())
        .collect();
    let yc: Vec<f64> = rows.iter().map(|&i| targets[i] - y_mean).collect();

    let (beta, ridge, deficient) = if p == 0 {
        (Vec::new(), 0.0, false)
    } else {
        let g = gram(&centered, p);
        let mut rhs = vec![0.0; p];
        for (r, y) in centered.iter().zip(&yc) {
            for k in 0..p {
                rhs[k] += r[k] * y;
            }
        }
        match factor_normal_matrix(&g, p) {
            Some(f) => (f.factor.solve(&rhs), f.ridge, f.rank_deficient()),
            // every centered column is zero: nothing to explain beyond the mean
            None => (vec![0.0; p], 0.0, true),
        }
    };
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFiniteInput);
    }

    let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    let rss = centered
        .iter()
        .zip(&yc)
        .map(|(r, y)| {
            let e = y - r.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>();
            e * e
        })
        .sum();
    let model = LinearModel {
        intercept,
        coefficients: columns.iter().zip(&beta).map(|(&j, &b)| (d.feature_names()[j].clone(), b)).collect(),
    };
    let diagnostics = FitDiagnostics { residual_sum_squares: rss, rank_deficient: deficient, ridge_used: ridge };
    Ok((model, diagnostics))
}
