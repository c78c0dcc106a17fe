//! Constant-factor private quantile via the sparse vector technique, and the
//! clipping range derived from it.
//!
//! The scan runs over the dyadic grid `g_i = 2^i / lambda_max`,
//! `i = 0..=i_max`, with
//! `i_max = ceil(log2(lambda_max/lambda_min)) + ceil(log2(max(1, ln(1/theta)))) + 2`.
//! Grid points are quantile *positions*, so the grid spans
//! `[1/lambda_max, ...]` and covers `ln(1/theta)/lambda` for every rate in
//! the bounds.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::privacy::{noisy_fraction_below, BudgetId, NoiseScale, Session};

/// Approximation constant of the SVT quantile; enters the clipping range.
pub const QUANTILE_APPROX_FACTOR: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    lambda_min: f64,
    lambda_max: f64,
}

impl RateBounds {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(lambda_min.is_finite() && lambda_max.is_finite() && 0.0 < lambda_min && lambda_min < lambda_max) {
            return Err(Error::InvalidBounds(lambda_min, lambda_max));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
        })
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn ratio(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.lambda_min <= lambda && lambda <= self.lambda_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileResult {
    /// The accepted grid point.
    pub quantile_value: f64,
    pub grid_index: usize,
    /// The noisy threshold the scan compared against.
    pub threshold_used: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.1..=0.9).contains(&theta) {
        Ok(())
    } else {
        Err(Error::OutOfRegime {
            name: "theta",
            value: theta,
            regime: "[1/10, 9/10]",
        })
    }
}

/// Largest grid index scanned for `(bounds, theta)`.
pub fn svt_max_index(bounds: &RateBounds, theta: f64) -> usize {
    let span = bounds.ratio().log2().ceil().max(0.0);
    let pad = (1.0 / theta).ln().max(1.0).log2().ceil();
    (span + pad) as usize + 2
}

pub fn svt_grid(bounds: &RateBounds, theta: f64) -> Vec<f64> {
    (0..=svt_max_index(bounds, theta))
        .map(|i| (i as f64).exp2() / bounds.lambda_max())
        .collect()
}

/// Returns the first grid point whose noisy empirical CDF reaches the noisy
/// threshold `(1 - theta) + Lap(2/(eps n))`; each point gets a fresh
/// `Lap(4/(eps n))` query. `Ok(None)` when the grid is exhausted.
pub fn svt_quantile(
    data: &Dataset,
    bounds: &RateBounds,
    theta: f64,
    session: &mut Session,
    budget: BudgetId,
) -> Result<Option<QuantileResult>> {
    check_theta(theta)?;
    let granted = session.budget(budget);
    if !granted.is_pure() {
        return Err(Error::RequiresPureDp(granted.delta));
    }
    let eps = session.spend(budget)?.epsilon;
    let n = data.len() as f64;
    let threshold_scale = NoiseScale::new(2.0 / (eps * n))?;
    let query_scale = NoiseScale::new(4.0 / (eps * n))?;

    let noise = session.noise();
    let threshold = (1.0 - theta) + noise.laplace(threshold_scale);
    for (grid_index, point) in svt_grid(bounds, theta).into_iter().enumerate() {
        if noisy_fraction_below(data, point, query_scale, noise) >= threshold {
            return Ok(Some(QuantileResult {
                quantile_value: point,
                grid_index,
                threshold_used: threshold,
            }));
        }
    }
    Ok(None)
}

/// `R = C * q * ln n` with `C = (c0 / ln(1/theta)) * (1 + ln(1/beta) / ln n)`
/// and `c0` = [`QUANTILE_APPROX_FACTOR`].
pub fn clipping_range(quantile_value: f64, n: usize, theta: f64, beta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfRegime {
            name: "theta",
            value: theta,
            regime: "(0, 1)",
        });
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::OutOfRegime {
            name: "beta",
            value: beta,
            regime: "(0, 1]",
        });
    }
    let ln_n = (n as f64).ln();
    Ok(clipping_constant(ln_n, theta, beta) * quantile_value * ln_n)
}

/// The multiplier `C` of the clipping range, as a function of `ln n`.
pub fn clipping_constant(ln_n: f64, theta: f64, beta: f64) -> f64 {
    QUANTILE_APPROX_FACTOR / (1.0 / theta).ln() * (1.0 + (1.0 / beta).ln() / ln_n)
}
