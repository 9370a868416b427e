//! Linear regression classification.
//!
//! Each class is represented by the span of its training vectors. A probe is
//! least-squares projected onto every class span and assigned to the class
//! with the smallest residual norm.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, factor_normal_matrix, RegularizedFactor};
use crate::predictor::{FeatureMap, Predictor};

/// Class identifier. Totally ordered by [`f64::total_cmp`]; ties in distance
/// go to the smallest label.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(pub f64);

impl PartialEq for ClassLabel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ClassLabel {}

impl PartialOrd for ClassLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ClassLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Training vectors of one class, stored as columns of a `q × p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub label: ClassLabel,
    columns: Vec<Vec<f64>>,
}

impl ClassModel {
    pub fn new(label: f64, columns: Vec<Vec<f64>>) -> Result<Self> {
        let q = columns.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        if q == 0 {
            return Err(Error::EmptyInput);
        }
        for c in &columns {
            if c.len() != q {
                return Err(Error::DimensionMismatch { expected: q, actual: c.len() });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
        }
        Ok(ClassModel { label: ClassLabel(label), columns })
    }

    pub fn dimension(&self) -> usize {
        self.columns[0].len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }
}

#[derive(Debug, Clone)]
struct FittedClass {
    model: ClassModel,
    factor: RegularizedFactor,
}

impl FittedClass {
    /// `ŷ = X (XᵀX)⁻¹ Xᵀ y`
    fn project(&self, y: &[f64]) -> Vec<f64> {
        let xty: Vec<f64> = self.model.columns.iter().map(|c| dot(c, y)).collect();
        let beta = self.factor.factor.solve(&xty);
        let mut yhat = vec![0.0; y.len()];
        for (c, b) in self.model.columns.iter().zip(&beta) {
            for (acc, v) in yhat.iter_mut().zip(c) {
                *acc += b * v;
            }
        }
        yhat
    }
}

/// Fitted classifier: per-class normal-matrix factors, sorted by label.
#[derive(Debug, Clone)]
pub struct LrcState {
    dimension: usize,
    classes: Vec<FittedClass>,
}

/// Precomputes `(XᵢᵀXᵢ)` factors for every class.
///
/// Singular normal matrices get the same ridge fallback as OLS; a class whose
/// columns are all zero cannot be regularized and is rejected.
pub fn lrc_fit(classes: Vec<ClassModel>) -> Result<LrcState> {
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }
    let dimension = classes[0].dimension();
    let mut fitted = Vec::with_capacity(classes.len());
    for model in classes {
        if model.dimension() != dimension {
            return Err(Error::DimensionMismatch { expected: dimension, actual: model.dimension() });
        }
        let p = model.columns.len();
        let mut g = vec![0.0; p * p];
        for a in 0..p {
            for b in a..p {
                let v = dot(&model.columns[a], &model.columns[b]);
                g[a * p + b] = v;
                g[b * p + a] = v;
            }
        }
        let factor =
            factor_normal_matrix(&g, p).ok_or_else(|| Error::SingularClassModel(model.label.to_string()))?;
        fitted.push(FittedClass { model, factor });
    }
    fitted.sort_by_key(|f| f.model.label);
    if let Some(w) = fitted.windows(2).find(|w| w[0].model.label == w[1].model.label) {
        return Err(Error::DuplicateClass(w[0].model.label.to_string()));
    }
    Ok(LrcState { dimension, classes: fitted })
}

impl LrcState {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.classes.iter().map(|c| c.model.label).collect()
    }

    /// Projection of `y` onto the span of class `label`.
    pub fn projection(&self, label: ClassLabel, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dimension(y)?;
        let class = self
            .classes
            .iter()
            .find(|c| c.model.label == label)
            .ok_or_else(|| Error::UnknownModel(label.to_string()))?;
        Ok(class.project(y))
    }

    /// `‖y − ŷᵢ‖₂` per class, ascending by label.
    pub fn distances(&self, y: &[f64]) -> Result<Vec<(ClassLabel, f64)>> {
        self.check_dimension(y)?;
        Ok(self
            .classes
            .iter()
            .map(|c| {
                let yhat = c.project(y);
                let d = y.iter().zip(&yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (c.model.label, d)
            })
            .collect())
    }

    fn check_dimension(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, actual: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(())
    }
}

/// Minimum-distance class of `y` and the distance to every class.
pub fn lrc_classify(state: &LrcState, y: &[f64]) -> Result<(ClassLabel, BTreeMap<ClassLabel, f64>)> {
    let distances = state.distances(y)?;
    // labels ascend, so strict `<` keeps the smallest label on ties
    let mut best = distances[0];
    for &(label, d) in &distances[1..] {
        if d < best.1 {
            best = (label, d);
        }
    }
    Ok((best.0, distances.into_iter().collect()))
}

/// Classifier over a dataset's features with one class per distinct grade.
#[derive(Debug, Clone)]
pub struct LrcClassifier {
    feature_names: Vec<String>,
    state: LrcState,
}

impl LrcClassifier {
    /// Groups rows by target value; each row becomes a column of its class.
    pub fn fit(d: &Dataset) -> Result<Self> {
        let mut groups: BTreeMap<ClassLabel, Vec<Vec<f64>>> = BTreeMap::new();
        for (row, &t) in d.rows().iter().zip(d.targets()) {
            groups.entry(ClassLabel(t)).or_default().push(row.clone());
        }
        let classes = groups
            .into_iter()
            .map(|(label, cols)| ClassModel::new(label.0, cols))
            .collect::<Result<Vec<_>>>()?;
        Ok(LrcClassifier { feature_names: d.feature_names().to_vec(), state: lrc_fit(classes)? })
    }

    pub fn state(&self) -> &LrcState {
        &self.state
    }

    pub fn classify(&self, features: &FeatureMap) -> Result<(ClassLabel, BTreeMap<ClassLabel, f64>)> {
        let y = self
            .feature_names
            .iter()
            .map(|n| features.get(n).copied().ok_or_else(|| Error::MissingFeature(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        lrc_classify(&self.state, &y)
    }
}

impl Predictor for LrcClassifier {
    fn predict(&self, features: &FeatureMap) -> Result<f64> {
        Ok(self.classify(features)?.0 .0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(q: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; q];
        v[i] = 1.0;
        v
    }

    #[test]
    fn orthogonal_unit_columns() {
        let state = lrc_fit(vec![
            ClassModel::new(4.0, vec![unit(3, 0)]).unwrap(),
            ClassModel::new(5.0, vec![unit(3, 1)]).unwrap(),
        ])
        .unwrap();
        let (label, d) = lrc_classify(&state, &[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(label, ClassLabel(4.0));
        assert_eq!(d[&ClassLabel(4.0)], 0.0);
        assert_eq!(d[&ClassLabel(5.0)], 2.0);
    }

    #[test]
    fn orthogonal_probe_has_norm_distance() {
        let state = lrc_fit(vec![
            ClassModel::new(1.0, vec![unit(3, 0)]).unwrap(),
            ClassModel::new(2.0, vec![unit(3, 1)]).unwrap(),
        ])
        .unwrap();
        let (label, d) = lrc_classify(&state, &[0.0, 0.0, 3.0]).unwrap();
        assert!(d.values().all(|&v| (v - 3.0).abs() < 1e-15));
        // tie goes to the smallest label
        assert_eq!(label, ClassLabel(1.0));
    }

    #[test]
    fn zero_column_class_is_singular() {
        let err = lrc_fit(vec![
            ClassModel::new(1.0, vec![vec![0.0, 0.0]]).unwrap(),
            ClassModel::new(2.0, vec![vec![1.0, 0.0]]).unwrap(),
        ])
        .unwrap_err();
        assert_eq!(err, Error::SingularClassModel("1".into()));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            lrc_fit(vec![ClassModel::new(1.0, vec![vec![1.0]]).unwrap()]).unwrap_err(),
            Error::TooFewClasses(1)
        );
        let state = lrc_fit(vec![
            ClassModel::new(1.0, vec![vec![1.0, 0.0]]).unwrap(),
            ClassModel::new(2.0, vec![vec![0.0, 1.0]]).unwrap(),
        ])
        .unwrap();
        assert_eq!(
            lrc_classify(&state, &[1.0]).unwrap_err(),
            Error::DimensionMismatch { expected: 2, actual: 1 }
        );
        assert!(matches!(
            lrc_fit(vec![
                ClassModel::new(1.0, vec![vec![1.0, 0.0]]).unwrap(),
                ClassModel::new(1.0, vec![vec![0.0, 1.0]]).unwrap(),
            ]),
            Err(Error::DuplicateClass(_))
        ));
        assert!(ClassModel::new(1.0, vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(ClassModel::new(1.0, vec![]).is_err());
    }

    #[test]
    fn classifier_from_dataset() {
        let d = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.1], vec![2.0, 0.2], vec![0.1, 1.0], vec![0.3, 3.0]],
            vec![4.0, 4.0, 6.0, 6.0],
        )
        .unwrap();
        let clf = LrcClassifier::fit(&d).unwrap();
        assert_eq!(clf.state().labels(), vec![ClassLabel(4.0), ClassLabel(6.0)]);
        let probe: FeatureMap = [("a".to_string(), 5.0), ("b".to_string(), 0.5)].into_iter().collect();
        assert_eq!(clf.predict(&probe).unwrap(), 4.0);
    }
}
