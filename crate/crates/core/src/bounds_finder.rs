//! Approximate-DP rate bounds from a stability-based dyadic histogram, and
//! the end-to-end learner that needs no caller-supplied bounds.
//!
//! Bin `k` is the half-open interval `[2^k, 2^{k+1})`; zero is put in the
//! lowest bin `k = -1074`. Empty bins are never materialized, so their noisy
//! count is exactly zero and they never survive the (positive) threshold.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::LN_2;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exp_learners::{best_of_both, Estimate, LearnerConfig};
use crate::privacy::{BudgetId, NoiseScale, PrivacyBudget, Session};
use crate::quantile_svt::RateBounds;

/// Lowest bin index; holds subnormals below `2^-1073` and zero.
pub const MIN_BIN: i32 = -1074;

/// Dyadic bin of a finite `x >= 0`, read off the float representation.
pub fn bin_index(x: f64) -> i32 {
    debug_assert!(x.is_finite() && x >= 0.0);
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    if exponent != 0 {
        return exponent - 1023;
    }
    let mantissa = bits & ((1u64 << 52) - 1);
    if mantissa == 0 {
        MIN_BIN
    } else {
        63 - mantissa.leading_zeros() as i32 + MIN_BIN
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicHistogram {
    /// Count fraction of each non-empty bin.
    pub bins: BTreeMap<i32, f64>,
    pub noisy_bins: BTreeMap<i32, f64>,
    pub survivor_set: BTreeSet<i32>,
    pub threshold: f64,
}

impl DyadicHistogram {
    /// Noisy count of bin `k`; exactly zero for bins absent from the data.
    pub fn noisy(&self, k: i32) -> f64 {
        self.noisy_bins.get(&k).copied().unwrap_or(0.0)
    }

    /// Argmax of the noisy counts over the survivors, smallest `k` on ties.
    pub fn top_bin(&self) -> Option<i32> {
        let mut best: Option<(i32, f64)> = None;
        for &k in &self.survivor_set {
            let c = self.noisy(k);
            if best.map_or(true, |(_, b)| c > b) {
                best = Some((k, c));
            }
        }
        best.map(|(k, _)| k)
    }
}

/// `(2/(eps n)) ln(2/delta) + 1/n`.
pub fn survivor_threshold(budget: &PrivacyBudget, n: usize) -> f64 {
    let n = n as f64;
    2.0 / (budget.epsilon * n) * (2.0 / budget.delta).ln() + 1.0 / n
}

pub fn dyadic_histogram(data: &Dataset, session: &mut Session, budget: BudgetId) -> Result<DyadicHistogram> {
    if session.budget(budget).is_pure() {
        return Err(Error::RequiresApproxDp);
    }
    let spent = session.spend(budget)?;
    let n = data.len();

    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for &x in data.values() {
        *counts.entry(bin_index(x)).or_default() += 1;
    }
    let bins: BTreeMap<i32, f64> = counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / n as f64))
        .collect();

    let scale = NoiseScale::new(2.0 / (spent.epsilon * n as f64))?;
    let noise = session.noise();
    let noisy_bins: BTreeMap<i32, f64> = bins.iter().map(|(&k, &c)| (k, c + noise.laplace(scale))).collect();

    let threshold = survivor_threshold(&spent, n);
    let survivor_set = noisy_bins
        .iter()
        .filter(|(_, &c)| c >= threshold)
        .map(|(&k, _)| k)
        .collect();
    Ok(DyadicHistogram {
        bins,
        noisy_bins,
        survivor_set,
        threshold,
    })
}

/// Bounds `(ln2 / 2^{k+1}, ln2 / 2^{k-1})` bracketing `ln2 / median`.
pub fn bounds_for_bin(k: i32) -> Result<RateBounds> {
    let lo = LN_2 * (-(k as f64 + 1.0)).exp2();
    let hi = LN_2 * (-(k as f64 - 1.0)).exp2();
    // a subnormal lower bound would break the exact ratio of 4
    if !(lo >= f64::MIN_POSITIVE && hi.is_finite()) {
        return Err(Error::BoundsOverflow);
    }
    RateBounds::new(lo, hi).map_err(|_| Error::BoundsOverflow)
}

pub fn find_bounds(data: &Dataset, session: &mut Session, budget: BudgetId) -> Result<RateBounds> {
    let hist = dyadic_histogram(data, session, budget)?;
    let k = hist.top_bin().ok_or(Error::NoBinSurvived)?;
    bounds_for_bin(k)
}

/// Bounds at `(eps/2, delta)`, then [`best_of_both`] at `(eps/2, 0)` inside
/// them.
pub fn learn_without_bounds(
    data: &Dataset,
    alpha: f64,
    beta: f64,
    session: &mut Session,
    budget: BudgetId,
) -> Result<Estimate> {
    let total = session.budget(budget);
    if total.is_pure() {
        return Err(Error::RequiresApproxDp);
    }
    let halves = [
        (PrivacyBudget::new(total.epsilon / 2.0, total.delta)?, "learn_without_bounds/bounds"),
        (PrivacyBudget::pure(total.epsilon / 2.0)?, "learn_without_bounds/learn"),
    ];
    let parts = session.split_exact(budget, &halves)?;
    let bounds = find_bounds(data, session, parts[0])?;
    let config = LearnerConfig::new(alpha, beta, bounds)?;
    let est = best_of_both(data, &config, session, parts[1])?;
    Ok(Estimate {
        budget_spent: session.ledger().spent_under(budget),
        ..est
    })
}
