//! Pure-DP learners for the rate of an exponential distribution.
//!
//! * [`private_mle`]: clipped mean plus Laplace noise, inverted.
//! * [`mle_learning`]: SVT range estimate at `eps/2`, then [`private_mle`]
//!   at `eps/2` with the derived clipping range.
//! * [`quantile_learning`]: binary search for the `(1 - 1/e)`-quantile,
//!   which equals `1/lambda`.
//! * [`best_of_both`]: a coarse quantile estimate at `eps/3` picks the MLE
//!   route (coarse rate >= 2) or the quantile route for the remaining
//!   `2 eps/3`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::privacy::{noisy_fraction_below, BudgetId, NoiseScale, PrivacyBudget, Session};
use crate::quantile_svt::{clipping_range, svt_quantile, RateBounds};

/// Quantile level used for range estimation in the MLE route.
pub const RANGE_THETA: f64 = 0.1;
/// Accuracy of the coarse stage of [`best_of_both`].
pub const COARSE_ALPHA: f64 = 0.5;
/// Coarse rates at or above this pick the MLE route.
pub const MLE_ROUTE_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub beta: f64,
    pub bounds: RateBounds,
}

impl LearnerConfig {
    pub fn new(alpha: f64, beta: f64, bounds: RateBounds) -> Result<Self> {
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::OutOfRegime {
                    name,
                    value,
                    regime: "(0, 1)",
                });
            }
        }
        Ok(Self {
            alpha,
            beta,
            bounds,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    pub fn with_bounds(&self, bounds: RateBounds) -> Self {
        Self { bounds, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    MleRoute,
    QuantileRoute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub lambda_hat: f64,
    pub route: Route,
    pub coarse_estimate: Option<f64>,
    pub budget_spent: PrivacyBudget,
}

fn require_pure(session: &Session, budget: BudgetId) -> Result<()> {
    let b = session.budget(budget);
    if b.is_pure() {
        Ok(())
    } else {
        Err(Error::RequiresPureDp(b.delta))
    }
}

/// `1 / (mean(min(x, R)) + Lap(R/(eps n)))`.
pub fn private_mle(data: &Dataset, clip_r: f64, session: &mut Session, budget: BudgetId) -> Result<f64> {
    if !(clip_r.is_finite() && clip_r > 0.0) {
        return Err(Error::InvalidScale(clip_r));
    }
    require_pure(session, budget)?;
    let eps = session.spend(budget)?.epsilon;
    let scale = NoiseScale::new(clip_r / (eps * data.len() as f64))?;
    let noisy_mean = data.clipped_mean(clip_r) + session.noise().laplace(scale);
    if noisy_mean <= 0.0 {
        return Err(Error::NonpositiveMean(noisy_mean));
    }
    Ok(1.0 / noisy_mean)
}

/// Range estimation followed by the private MLE, half the budget each.
pub fn mle_learning(
    data: &Dataset,
    config: &LearnerConfig,
    session: &mut Session,
    budget: BudgetId,
) -> Result<Estimate> {
    require_pure(session, budget)?;
    let parts = session.split(
        budget,
        &[0.5, 0.5],
        &["mle_learning/range", "mle_learning/private_mle"],
    )?;
    let q = svt_quantile(data, &config.bounds, RANGE_THETA, session, parts[0])?
        .ok_or(Error::RangeEstimationFailed)?;
    let clip = clipping_range(q.quantile_value, data.len(), RANGE_THETA, config.beta)?;
    let lambda_hat = private_mle(data, clip, session, parts[1])?;
    Ok(Estimate {
        lambda_hat,
        route: Route::MleRoute,
        coarse_estimate: None,
        budget_spent: session.ledger().spent_under(budget),
    })
}

/// Geometric checkpoints `q_j = (1/lambda_max) * ratio^j`, `j = 0..=last`,
/// with `ratio = 1/(1 - alpha/2)` and `last` the first index reaching
/// `1/lambda_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointGrid {
    lambda_max: f64,
    ratio: f64,
    last: usize,
}

impl CheckpointGrid {
    pub fn new(bounds: &RateBounds, alpha: f64) -> Self {
        let ratio = 1.0 / (1.0 - alpha / 2.0);
        let last = (bounds.ratio().ln() / ratio.ln()).ceil().max(1.0) as usize;
        Self {
            lambda_max: bounds.lambda_max(),
            ratio,
            last,
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        self.ratio.powi(j as i32) / self.lambda_max
    }

    pub fn last_index(&self) -> usize {
        self.last
    }

    /// Iteration cap of the binary search: `ceil(log2(last + 1))`.
    pub fn iterations(&self) -> usize {
        ((self.last + 1) as f64).log2().ceil().max(1.0) as usize
    }
}

/// Acceptance band `1 - 1/e -/+ alpha/(2e)` for the noisy CDF.
pub fn acceptance_band(alpha: f64) -> (f64, f64) {
    let inv_e = (-1.0f64).exp();
    let center = 1.0 - inv_e;
    let half = alpha * inv_e / 2.0;
    (center - half, center + half)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointHit {
    pub checkpoint: f64,
    pub index: usize,
    pub iterations_used: usize,
}

/// The binary search itself; returns the accepted checkpoint position.
pub fn quantile_search(
    data: &Dataset,
    alpha: f64,
    bounds: &RateBounds,
    session: &mut Session,
    budget: BudgetId,
) -> Result<CheckpointHit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRegime {
            name: "alpha",
            value: alpha,
            regime: "(0, 1)",
        });
    }
    require_pure(session, budget)?;
    let eps = session.spend(budget)?.epsilon;
    let grid = CheckpointGrid::new(bounds, alpha);
    let iterations = grid.iterations();
    // each query gets eps / iterations, whether or not the loop runs to the cap
    let scale = NoiseScale::new(iterations as f64 / (eps * data.len() as f64))?;
    let (lo, hi) = acceptance_band(alpha);

    let (mut lower, mut upper) = (0usize, grid.last_index());
    let noise = session.noise();
    for t in 0..iterations {
        let mid = (lower + upper) / 2;
        let checkpoint = grid.point(mid);
        let noisy = noisy_fraction_below(data, checkpoint, scale, noise);
        if noisy > hi {
            upper = mid;
        } else if noisy < lo {
            lower = mid;
        } else {
            return Ok(CheckpointHit {
                checkpoint,
                index: mid,
                iterations_used: t + 1,
            });
        }
    }
    Err(Error::SearchExhausted)
}

/// Rate estimate `1 / q` for the checkpoint `q` accepted by the search.
pub fn quantile_learning(
    data: &Dataset,
    config: &LearnerConfig,
    session: &mut Session,
    budget: BudgetId,
) -> Result<Estimate> {
    let hit = quantile_search(data, config.alpha, &config.bounds, session, budget)?;
    Ok(Estimate {
        lambda_hat: 1.0 / hit.checkpoint,
        route: Route::QuantileRoute,
        coarse_estimate: None,
        budget_spent: session.ledger().spent_under(budget),
    })
}

pub fn best_of_both(
    data: &Dataset,
    config: &LearnerConfig,
    session: &mut Session,
    budget: BudgetId,
) -> Result<Estimate> {
    require_pure(session, budget)?;
    let parts = session.split(
        budget,
        &[1.0 / 3.0, 2.0 / 3.0],
        &["best_of_both/coarse", "best_of_both/refine"],
    )?;
    let coarse = match quantile_search(data, COARSE_ALPHA, &config.bounds, session, parts[0]) {
        Ok(hit) => 1.0 / hit.checkpoint,
        Err(Error::SearchExhausted) => return Err(Error::CoarseFailed),
        Err(e) => return Err(e),
    };
    let refined = if coarse >= MLE_ROUTE_THRESHOLD {
        mle_learning(data, config, session, parts[1])?
    } else {
        quantile_learning(data, config, session, parts[1])?
    };
    Ok(Estimate {
        coarse_estimate: Some(coarse),
        budget_spent: session.ledger().spent_under(budget),
        ..refined
    })
}
