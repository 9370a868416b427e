use indexmap::IndexMap;

use crate::dataset::Dataset;
use crate::error::Result;

/// Named feature values of one respondent.
pub type FeatureMap = IndexMap<String, f64>;

/// Anything that maps a feature map to a grade.
pub trait Predictor {
    fn predict(&self, features: &FeatureMap) -> Result<f64>;

    /// Predictions for every row of `d`, in row order.
    fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        (0..d.len()).map(|i| self.predict(&d.features_of(i))).collect()
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict(&self, features: &FeatureMap) -> Result<f64> {
        (**self).predict(features)
    }
}
