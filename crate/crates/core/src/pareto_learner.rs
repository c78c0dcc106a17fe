//! Pareto `(x_m, alpha_p)` learning through the exponential learners.
//!
//! Above any pivot `t >= x_m`, `ln(X/t)` of a Pareto sample is exactly
//! `Exp(alpha_p)`. With known scale the pivot is `x_m` itself; otherwise a
//! private low quantile `q_tau` serves as pivot and the scale is recovered
//! from `x_m = q_tau (1 - tau)^(1/alpha_p)`.

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exp_learners::{best_of_both, mle_learning, LearnerConfig, Route};
use crate::privacy::{BudgetId, PrivacyBudget, Session};
use crate::quantile_svt::svt_quantile;

/// `1 / (4 ln 7)`.
pub fn default_tau() -> f64 {
    1.0 / (4.0 * 7f64.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoEstimate {
    pub shape_hat: f64,
    pub scale_hat: f64,
    /// `None` for the known-scale learner.
    pub tail_quantile_tau: Option<f64>,
    /// The pivot the tail was cut at (`x_m` when the scale is known).
    pub pivot: f64,
    pub tail_count: usize,
    pub route: Route,
    pub budget_spent: PrivacyBudget,
}

/// `{ ln(x / pivot) : x >= pivot }`, in input order.
pub fn log_transform(data: &Dataset, pivot: f64) -> Result<Dataset> {
    if !(pivot.is_finite() && pivot > 0.0) {
        return Err(Error::InvalidScale(pivot));
    }
    let tail: Vec<f64> = data
        .values()
        .iter()
        .filter(|&&x| x >= pivot)
        .map(|&x| (x / pivot).ln())
        .collect();
    if tail.is_empty() {
        return Err(Error::EmptyTail(pivot));
    }
    Dataset::new(tail)
}

/// `q (1 - tau)^(1/shape)`.
pub fn recover_scale(pivot: f64, tau: f64, shape: f64) -> f64 {
    pivot * (1.0 - tau).powf(1.0 / shape)
}

/// The MLE pipeline on `ln(x / x_m)`; `config.bounds` bound the shape.
pub fn learn_pareto_known_scale(
    data: &Dataset,
    x_m: f64,
    config: &LearnerConfig,
    session: &mut Session,
    budget: BudgetId,
) -> Result<ParetoEstimate> {
    if !(x_m.is_finite() && x_m > 0.0) {
        return Err(Error::InvalidScale(x_m));
    }
    if let Some(&value) = data.sorted().first().filter(|&&v| v < x_m) {
        return Err(Error::ScaleViolation { value, scale: x_m });
    }
    let logs = log_transform(data, x_m)?;
    let est = mle_learning(&logs, config, session, budget)?;
    Ok(ParetoEstimate {
        shape_hat: est.lambda_hat,
        scale_hat: x_m,
        tail_quantile_tau: None,
        pivot: x_m,
        tail_count: logs.len(),
        route: est.route,
        budget_spent: est.budget_spent,
    })
}

/// Private `tau`-quantile pivot at `eps/2`, [`best_of_both`] on the tail
/// logs at `eps/2`, then scale recovery. `config.bounds` bound the shape
/// and also define the quantile grid.
pub fn learn_pareto(
    data: &Dataset,
    config: &LearnerConfig,
    tau: f64,
    session: &mut Session,
    budget: BudgetId,
) -> Result<ParetoEstimate> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::OutOfRegime {
            name: "tau",
            value: tau,
            regime: "(0, 1)",
        });
    }
    let parts = session.split(budget, &[0.5, 0.5], &["learn_pareto/pivot", "learn_pareto/shape"])?;
    let pivot = svt_quantile(data, &config.bounds, 1.0 - tau, session, parts[0])?
        .ok_or(Error::RangeEstimationFailed)?
        .quantile_value;
    let tail = log_transform(data, pivot)?;
    let est = best_of_both(&tail, config, session, parts[1])?;
    Ok(ParetoEstimate {
        shape_hat: est.lambda_hat,
        scale_hat: recover_scale(pivot, tau, est.lambda_hat),
        tail_quantile_tau: Some(tau),
        pivot,
        tail_count: tail.len(),
        route: est.route,
        budget_spent: session.ledger().spent_under(budget),
    })
}
