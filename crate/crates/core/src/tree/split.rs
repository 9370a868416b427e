//! Standard-deviation-reduction split selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// A candidate test `feature <= threshold` and its error reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: String,
    pub threshold: f64,
    pub gain: f64,
}

impl SplitCandidate {
    /// Tie-break order: higher gain, then feature name, then lower threshold.
    fn beats(&self, other: &SplitCandidate) -> bool {
        match self.gain.partial_cmp(&other.gain) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Less) | None => false,
            Some(Ordering::Equal) => match self.feature.cmp(&other.feature) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => self.threshold < other.threshold,
            },
        }
    }
}

/// Population standard deviation (divisor `n`).
pub fn standard_deviation(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt())
}

/// `sd(T) − Σ |Tᵢ|/|T| · sd(Tᵢ)` for a two-way partition of `targets`.
pub fn sdr(targets: &[f64], left: &[f64], right: &[f64]) -> Result<f64> {
    if left.is_empty() || right.is_empty() || left.len() + right.len() != targets.len() {
        return Err(Error::InvalidPartition);
    }
    let mut whole = targets.to_vec();
    let mut parts: Vec<f64> = left.iter().chain(right).copied().collect();
    whole.sort_by(f64::total_cmp);
    parts.sort_by(f64::total_cmp);
    if whole.iter().zip(&parts).any(|(a, b)| a.total_cmp(b) != Ordering::Equal) {
        return Err(Error::InvalidPartition);
    }
    let n = targets.len() as f64;
    Ok(standard_deviation(targets)?
        - left.len() as f64 / n * standard_deviation(left)?
        - right.len() as f64 / n * standard_deviation(right)?)
}

/// Running mean / sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn sd(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2.max(0.0) / self.n as f64).sqrt()
        }
    }
}

/// Midpoint of two consecutive distinct values, kept in `[lo, hi)`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid < hi && mid >= lo {
        mid
    } else {
        lo
    }
}

/// Best split over all rows of `d` with both children holding at least
/// `min_split` rows. `None` when no candidate has positive gain.
pub fn best_split(d: &Dataset, min_split: usize) -> Option<SplitCandidate> {
    let rows: Vec<usize> = (0..d.len()).collect();
    best_split_rows(d, &rows, min_split)
}

/// [`best_split`] restricted to a row subset.
pub(crate) fn best_split_rows(d: &Dataset, rows: &[usize], min_split: usize) -> Option<SplitCandidate> {
    let n = rows.len();
    let min_split = min_split.max(1);
    if n < 2 * min_split {
        return None;
    }
    let targets = d.targets();
    let mut total = Moments::default();
    for &i in rows {
        total.push(targets[i]);
    }
    let sd_total = total.sd();
    let nf = n as f64;

    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut suffix = vec![Moments::default(); n + 1];
    for (j, name) in d.feature_names().iter().enumerate() {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (d.row(i)[j], targets[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        // suffix[i] summarizes pairs[i..]
        suffix[n] = Moments::default();
        for i in (0..n).rev() {
            let mut m = suffix[i + 1];
            m.push(pairs[i].1);
            suffix[i] = m;
        }

        let mut left = Moments::default();
        for i in 1..n {
            left.push(pairs[i - 1].1);
            if i < min_split || n - i < min_split {
                continue;
            }
            let (lo, hi) = (pairs[i - 1].0, pairs[i].0);
            if lo >= hi {
                continue;
            }
            let right = &suffix[i];
            let gain = sd_total - (i as f64 / nf) * left.sd() - ((n - i) as f64 / nf) * right.sd();
            if !(gain > 0.0) {
                continue;
            }
            let candidate = SplitCandidate { feature: name.clone(), threshold: midpoint(lo, hi), gain };
            if best.as_ref().is_none_or(|b| candidate.beats(b)) {
                best = Some(candidate);
            }
        }
    }
    best
}
