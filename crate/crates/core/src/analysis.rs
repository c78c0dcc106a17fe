//! Sample-size calculators, the packing family and the packing lower bound.
//!
//! All logarithms are natural except `T` in [`TheoremId::Lem39`], which is a
//! base-2 iteration count. Big-O statements are evaluated with every hidden
//! constant set to 1 and flagged `up_to_constants`; callers scale them with a
//! safety factor. Ceilings are applied once, at the end.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::distributions::exp_tv;
use crate::error::{Error, Result};
use crate::pareto_learner::default_tau;
use crate::quantile_svt::RateBounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TheoremId {
    Lem32,
    Lem36,
    Thm34,
    Lem39,
    Thm310,
    Thm311,
    Lem61,
    Thm62,
    LowerBound52,
    ParetoB6,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        TheoremId::Lem32,
        TheoremId::Lem36,
        TheoremId::Thm34,
        TheoremId::Lem39,
        TheoremId::Thm310,
        TheoremId::Thm311,
        TheoremId::Lem61,
        TheoremId::Thm62,
        TheoremId::LowerBound52,
        TheoremId::ParetoB6,
    ];

    /// Whether the formula hides constants (evaluated here with constant 1).
    pub fn up_to_constants(self) -> bool {
        matches!(
            self,
            TheoremId::Lem36 | TheoremId::Thm34 | TheoremId::Thm310 | TheoremId::Thm311 | TheoremId::Thm62 | TheoremId::ParetoB6
        )
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for TheoremId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        TheoremId::ALL
            .iter()
            .copied()
            .find(|t| t.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<String> = TheoremId::ALL.iter().map(|t| t.to_string()).collect();
                format!("unknown theorem `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Calculator inputs; each theorem reads the subset it needs. For
/// [`TheoremId::ParetoB6`], `alpha` is the shape accuracy and `lambda` the
/// true shape.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CalcInputs {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub bounds: Option<RateBounds>,
    pub clip_r: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSizeReport {
    pub theorem_id: TheoremId,
    pub n_required: u64,
    /// The expression before the final ceiling.
    pub value: f64,
    pub up_to_constants: bool,
    pub inputs: CalcInputs,
}

fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or(Error::IncompleteInputs(name))
}

fn need_ratio(inputs: &CalcInputs) -> Result<f64> {
    inputs
        .bounds
        .map(|b| b.ratio())
        .ok_or(Error::IncompleteInputs("lambda_min/lambda_max"))
}

/// Smallest `n >= e` with `n = f(n)` for an `f` nondecreasing in `n` and
/// growing like `ln n`; found by iterating from below.
fn fixed_point(f: impl Fn(f64) -> f64) -> f64 {
    let mut n = std::f64::consts::E;
    for _ in 0..500 {
        let next = f(n).max(std::f64::consts::E);
        if (next - n).abs() <= 1e-12 * next {
            return next;
        }
        n = next;
    }
    n
}

fn max_of(terms: &[f64]) -> f64 {
    terms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `T = ceil(log2(ln(ratio) / alpha))`, at least 1.
pub fn lem39_iterations(alpha: f64, ratio: f64) -> u64 {
    (ratio.ln() / alpha).log2().ceil().max(1.0) as u64
}

fn expression(id: TheoremId, i: &CalcInputs) -> Result<f64> {
    use TheoremId::*;
    let v = match id {
        Lem32 => {
            let (beta, eps, ratio) = (need(i.beta, "beta")?, need(i.epsilon, "epsilon")?, need_ratio(i)?);
            max_of(&[5.0 / eps * (4.0 * ratio.ln() / beta).ln(), 200.0 * (4.0 / beta).ln()])
        }
        Lem36 => {
            let alpha = need(i.alpha, "alpha")?;
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            let lambda = need(i.lambda, "lambda")?;
            let r = need(i.clip_r, "clip_r")?;
            let gap = alpha - (-lambda * r).exp();
            if gap <= 0.0 {
                return Err(Error::RegimeViolation(format!(
                    "alpha = {alpha} must exceed exp(-lambda R) = {}",
                    (-lambda * r).exp()
                )));
            }
            let lb = (1.0 / beta).ln();
            max_of(&[r * lb / (eps * gap), lb / (alpha * alpha)])
        }
        Thm34 => {
            let alpha = need(i.alpha, "alpha")?;
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            let lambda = need(i.lambda, "lambda")?;
            let ratio = need_ratio(i)?;
            let lb = (1.0 / beta).ln();
            let rest = max_of(&[lb / (alpha * alpha), (ratio.ln() / beta).ln() / eps]);
            let slope = (1.0 / alpha).ln() * lb / (lambda * eps * alpha);
            fixed_point(|n| (slope * n.ln()).max(rest))
        }
        Lem39 => {
            let alpha = need(i.alpha, "alpha")?;
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            let t = lem39_iterations(alpha, need_ratio(i)?) as f64;
            let l = (2.0 * t / beta).ln();
            max_of(&[
                2.0 * std::f64::consts::E * t / (eps * alpha) * l,
                2.0 / (alpha * alpha) * l,
            ])
        }
        Thm310 => {
            let alpha = need(i.alpha, "alpha")?;
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            let big_l = need_ratio(i)?.ln() / alpha;
            max_of(&[
                big_l.ln() / (eps * alpha) * (big_l / beta).ln(),
                (big_l / beta).ln() / (alpha * alpha),
            ])
        }
        Thm311 => {
            let alpha = need(i.alpha, "alpha")?;
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            let lambda = need(i.lambda, "lambda")?;
            let ratio = need_ratio(i)?;
            let big_l = ratio.ln() / alpha;
            let lb = (1.0 / beta).ln();
            let quantile_term = big_l.ln() / (eps * alpha) * (big_l / beta).ln();
            let slope = (1.0 / alpha).ln() * lb / (lambda * eps * alpha);
            let rest = max_of(&[
                (big_l / beta).ln() / (alpha * alpha),
                lb / (alpha * alpha),
                (ratio.ln() / beta).ln() / eps,
            ]);
            fixed_point(|n| (slope * n.ln()).min(quantile_term).max(rest))
        }
        Lem61 => {
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            let delta = need(i.delta, "delta")?;
            max_of(&[800.0 / eps * (2.0 / (delta * beta)).ln(), 5000.0 * (2.0 / beta).ln()])
        }
        Thm62 => {
            let alpha = need(i.alpha, "alpha")?;
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            let delta = need(i.delta, "delta")?;
            let lambda = need(i.lambda, "lambda")?;
            let la = (1.0 / alpha).ln();
            let lb = (1.0 / beta).ln();
            let quantile_term = la / (eps * alpha) * (la / beta).ln();
            let slope = la * lb / (lambda * eps * alpha);
            let rest = max_of(&[
                (la / beta).ln() / (alpha * alpha),
                lb / (alpha * alpha),
                (1.0 / (delta * beta)).ln() / eps,
            ]);
            fixed_point(|n| (slope * n.ln()).min(quantile_term).max(rest))
        }
        LowerBound52 => {
            let alpha = need(i.alpha, "alpha")?;
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            lower_bound_value(alpha, beta, eps, need_ratio(i)?)?
        }
        ParetoB6 => {
            let gamma = need(i.alpha, "alpha")?;
            let beta = need(i.beta, "beta")?;
            let eps = need(i.epsilon, "epsilon")?;
            let shape = need(i.lambda, "lambda")?;
            let ratio = need_ratio(i)?;
            let tau = i.tau.unwrap_or_else(default_tau);
            let big_l = ratio.ln() / gamma;
            let lb = (1.0 / beta).ln();
            let linear = f64::min(
                big_l.ln() / (eps * gamma) * (big_l / beta).ln(),
                (1.0 / gamma).ln() * lb / (shape * eps * gamma),
            );
            let body = max_of(&[linear, (big_l / beta).ln() / (gamma * gamma), (ratio.ln() / beta).ln() / eps]);
            body / (1.0 - tau)
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::RegimeViolation(format!("{id} evaluates to {v}")))
    }
}

pub fn required_n(theorem_id: TheoremId, inputs: &CalcInputs) -> Result<SampleSizeReport> {
    let value = expression(theorem_id, inputs)?;
    Ok(SampleSizeReport {
        theorem_id,
        n_required: value.ceil().max(1.0) as u64,
        value,
        up_to_constants: theorem_id.up_to_constants(),
        inputs: *inputs,
    })
}

fn check_half_open(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 0.5 {
        Ok(())
    } else {
        Err(Error::OutOfRegime {
            name,
            value,
            regime: "(0, 1/2)",
        })
    }
}

fn lower_bound_value(alpha: f64, beta: f64, epsilon: f64, ratio: f64) -> Result<f64> {
    check_half_open("alpha", alpha)?;
    check_half_open("beta", beta)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidBudget { epsilon, delta: 0.0 });
    }
    if !(ratio > 1.0) {
        return Err(Error::DegenerateBounds);
    }
    Ok(1.0 / (6.0 * epsilon * alpha) * (ratio.ln() / (16.0 * alpha) / beta).ln())
}

/// Packing lower bound for a bounds ratio `lambda_max / lambda_min`.
pub fn lower_bound_for_ratio(alpha: f64, beta: f64, epsilon: f64, ratio: f64) -> Result<u64> {
    Ok(lower_bound_value(alpha, beta, epsilon, ratio)?.ceil().max(1.0) as u64)
}

/// `ceil((1/(6 eps alpha)) ln((ln(ratio)/(16 alpha)) / beta))`, at least 1.
pub fn lower_bound_n(alpha: f64, beta: f64, epsilon: f64, bounds: &RateBounds) -> Result<u64> {
    lower_bound_for_ratio(alpha, beta, epsilon, bounds.ratio())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingFamily {
    pub rates: Vec<f64>,
    pub alpha: f64,
    pub bounds: RateBounds,
}

impl PackingFamily {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Smallest TV between adjacent members (1.0 for a single member).
    pub fn min_adjacent_tv(&self) -> Result<f64> {
        self.rates
            .windows(2)
            .map(|w| exp_tv(w[1], w[0]))
            .try_fold(1.0f64, |acc, tv| tv.map(|t| acc.min(t)))
    }
}

/// `lambda_min (1 + 8 alpha)^i` up to `lambda_max` (with a 1e-12 relative
/// allowance so that an endpoint hit by rounding is kept).
pub fn build_packing(bounds: &RateBounds, alpha: f64) -> Result<PackingFamily> {
    check_half_open("alpha", alpha)?;
    let step = 1.0 + 8.0 * alpha;
    let cap = bounds.lambda_max() * (1.0 + 1e-12);
    let mut rates = vec![bounds.lambda_min()];
    loop {
        let next = rates[rates.len() - 1] * step;
        if next > cap {
            break;
        }
        rates.push(next);
    }
    Ok(PackingFamily {
        rates,
        alpha,
        bounds: *bounds,
    })
}
