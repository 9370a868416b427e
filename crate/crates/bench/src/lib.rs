//! Shared inputs for the criterion benches.

use gradecast_core::{aggregate_factors, builtin_schema, random_regression, synthesize, Dataset, Granularity, SynthSpec};

/// Synthetic questionnaire data at variable granularity.
pub fn questionnaire(samples: usize) -> Dataset {
    let spec = SynthSpec { samples, seed: 7, ..SynthSpec::default() };
    synthesize(&builtin_schema(), &spec).expect("synthetic data")
}

/// The same rows aggregated to factors.
pub fn questionnaire_factors(samples: usize) -> Dataset {
    let d = questionnaire(samples);
    debug_assert_eq!(d.granularity(), Granularity::Variable);
    aggregate_factors(&d, &builtin_schema()).expect("aggregation")
}

pub fn regression(samples: usize, features: usize) -> Dataset {
    random_regression(3, samples, features, true).expect("regression data")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(questionnaire(20).num_features(), 70);
        assert_eq!(questionnaire_factors(20).num_features(), 21);
        assert_eq!(regression(30, 4).len(), 30);
    }
}
