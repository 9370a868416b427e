//! Regression error metrics and the evaluation report.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::predictor::Predictor;

/// Predicted values paired with observed targets.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPairs {
    predicted: Vec<f64>,
    actual: Vec<f64>,
}

impl PredictionPairs {
    pub fn new(predicted: Vec<f64>, actual: Vec<f64>) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::LengthMismatch { predicted: predicted.len(), actual: actual.len() });
        }
        if predicted.is_empty() {
            return Err(Error::EmptyPairs);
        }
        if predicted.iter().chain(&actual).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(PredictionPairs { predicted, actual })
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual.is_empty()
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn actual(&self) -> &[f64] {
        &self.actual
    }

    fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.predicted.iter().zip(&self.actual).map(|(p, t)| p - t)
    }

    fn actual_mean(&self) -> f64 {
        self.actual.iter().sum::<f64>() / self.len() as f64
    }
}

pub fn mae(p: &PredictionPairs) -> f64 {
    p.errors().map(f64::abs).sum::<f64>() / p.len() as f64
}

pub fn rmse(p: &PredictionPairs) -> f64 {
    (p.errors().map(|e| e * e).sum::<f64>() / p.len() as f64).sqrt()
}

/// Relative absolute error in percent: total absolute error over that of
/// always predicting the mean of the actuals.
pub fn rae(p: &PredictionPairs) -> Result<f64> {
    let mean = p.actual_mean();
    let denom: f64 = p.actual.iter().map(|t| (t - mean).abs()).sum();
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(100.0 * p.errors().map(f64::abs).sum::<f64>() / denom)
}

/// Root relative squared error in percent.
pub fn rrse(p: &PredictionPairs) -> Result<f64> {
    let mean = p.actual_mean();
    let denom: f64 = p.actual.iter().map(|t| (t - mean) * (t - mean)).sum();
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(100.0 * (p.errors().map(|e| e * e).sum::<f64>() / denom).sqrt())
}

/// Pearson correlation; `None` when either side has zero variance or fewer
/// than two pairs.
pub fn correlation(p: &PredictionPairs) -> Option<f64> {
    let n = p.len();
    if n < 2 {
        return None;
    }
    let mp = p.predicted.iter().sum::<f64>() / n as f64;
    let ma = p.actual_mean();
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in p.predicted.iter().zip(&p.actual) {
        let (dx, dy) = (x - mp, y - ma);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Metrics of one model on one test set. Field order is the JSON order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mae: f64,
    pub rmse: f64,
    pub rae_percent: f64,
    pub rrse_percent: f64,
    /// `null` when undefined (constant predictions or actuals).
    pub correlation: Option<f64>,
    /// `null` when the model was loaded rather than built in this process.
    pub build_time_s: Option<f64>,
    pub test_time_s: f64,
}

/// Seconds rounded to millisecond resolution.
pub fn seconds_ms(d: Duration) -> f64 {
    (d.as_secs_f64() * 1000.0).round() / 1000.0
}

pub fn report_from_pairs(p: &PredictionPairs, build_time: Option<Duration>, test_time: Duration) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        mae: mae(p),
        rmse: rmse(p),
        rae_percent: rae(p)?,
        rrse_percent: rrse(p)?,
        correlation: correlation(p),
        build_time_s: build_time.map(seconds_ms),
        test_time_s: seconds_ms(test_time),
    })
}

/// Predicts every row of `test` and assembles the report. Test time covers
/// prediction only.
pub fn evaluate<P: Predictor + ?Sized>(model: &P, test: &Dataset, build_time: Option<Duration>) -> Result<EvaluationReport> {
    let start = Instant::now();
    let predicted = model.predict_dataset(test)?;
    let test_time = start.elapsed();
    let pairs = PredictionPairs::new(predicted, test.targets().to_vec())?;
    report_from_pairs(&pairs, build_time, test_time)
}
