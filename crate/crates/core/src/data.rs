use crate::error::{Error, Result};

/// Immutable sample of finite, nonnegative reals.
///
/// Keeps the values in input order (sums are taken in that order) and a
/// sorted copy for logarithmic-time counting queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidData { index, value });
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of values strictly below `threshold`.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.sorted.partition_point(|&x| x < threshold)
    }

    /// Empirical CDF with strict inequality: `#{x < threshold} / n`.
    pub fn fraction_below(&self, threshold: f64) -> f64 {
        self.count_below(threshold) as f64 / self.len() as f64
    }

    /// Mean of `min(x, clip)` summed in input order.
    pub fn clipped_mean(&self, clip: f64) -> f64 {
        let sum: f64 = self.values.iter().map(|&x| x.min(clip)).sum();
        sum / self.len() as f64
    }
}
