//! Seeded synthetic questionnaire data.
//!
//! Responses are uniform over the scale; grades come from a fixed linear
//! model over the coded responses plus Gaussian noise, clamped to the grade
//! bounds and rounded to four decimals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{aggregate_factors, Dataset, Granularity};
use crate::error::{Error, Result};
use crate::linear::LinearModel;
use crate::paper_models::{builtin_model, PaperModelId};
use crate::schema::{GradeBounds, QuestionnaireSchema};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub samples: usize,
    pub seed: u64,
    pub noise_sd: f64,
    pub granularity: Granularity,
    /// Generating model over variables; defaults to the final variable-level
    /// tree model.
    pub truth: LinearModel,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            samples: 100,
            seed: 42,
            noise_sd: 0.25,
            granularity: Granularity::Variable,
            truth: builtin_model(PaperModelId::M5pVariableFinal),
        }
    }
}

pub fn synthesize(schema: &QuestionnaireSchema, spec: &SynthSpec) -> Result<Dataset> {
    if spec.samples == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let names = schema.variable_names();
    let bound = spec.truth.bind(&names)?;
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|_| Error::NonFiniteInput)?;
    let bounds = GradeBounds::default();
    let top = schema.scale.span() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.samples);
    let mut targets = Vec::with_capacity(spec.samples);
    for _ in 0..spec.samples {
        let row: Vec<f64> = (0..names.len()).map(|_| rng.random_range(0..=top) as f64).collect();
        let grade = bounds.clamp(bound.predict_row(&row) + noise.sample(&mut rng));
        targets.push((grade * 1e4).round() / 1e4);
        rows.push(row);
    }
    let d = Dataset::new(names, rows, targets)?;
    match spec.granularity {
        Granularity::Variable => Ok(d),
        Granularity::Factor => aggregate_factors(&d, schema),
        Granularity::Custom => Err(Error::WrongGranularity { expected: "variable", actual: "custom" }),
    }
}

/// Random regression problem over features `f0..f{p-1}`: a linear trend with
/// a step in `f0` plus unit Gaussian noise. Discrete problems draw features
/// from `0..=4` so that values repeat.
pub fn random_regression(seed: u64, samples: usize, features: usize, discrete: bool) -> Result<Dataset> {
    if samples == 0 || features == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..features).map(|_| rng.random_range(-2.0..2.0)).collect();
    let step = rng.random_range(-5.0..5.0);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows = Vec::with_capacity(samples);
    let mut targets = Vec::with_capacity(samples);
    for _ in 0..samples {
        let row: Vec<f64> = (0..features)
            .map(|_| if discrete { rng.random_range(0..=4) as f64 } else { rng.random_range(0.0..10.0) })
            .collect();
        let mid = if discrete { 2.0 } else { 5.0 };
        let trend: f64 = row.iter().zip(&weights).map(|(x, w)| x * w).sum();
        let jump = if row[0] > mid { step } else { 0.0 };
        targets.push(trend + jump + noise.sample(&mut rng));
        rows.push(row);
    }
    Dataset::new((0..features).map(|j| format!("f{j}")).collect(), rows, targets)
}
