//! Exponential and Pareto models, exact TV/KL formulas, and the separation
//! function used by the packing construction.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Continuous family with a closed-form quantile; sampling is inverse CDF.
pub trait Continuous {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    fn quantile(&self, p: f64) -> f64;

    /// `n` i.i.d. draws `quantile(u)` with `u ~ U[0, 1)`.
    fn sample<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::EmptyRequest);
        }
        let values = (0..n).map(|_| self.quantile(rng.gen::<f64>())).collect();
        Dataset::new(values)
    }
}

/// `Exp(rate)`, density `rate * exp(-rate * x)` on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpModel {
    rate: f64,
}

impl ExpModel {
    pub fn new(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn median(&self) -> f64 {
        std::f64::consts::LN_2 / self.rate
    }
}

impl Continuous for ExpModel {
    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.rate * (-self.rate * x).exp()
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        -(-p).ln_1p() / self.rate
    }
}

/// `Pareto(scale, shape)` on `[scale, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoModel {
    scale: f64,
    shape: f64,
}

impl ParetoModel {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        for v in [scale, shape] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidShape(v));
            }
        }
        Ok(Self { scale, shape })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }
}

impl Continuous for ParetoModel {
    fn pdf(&self, x: f64) -> f64 {
        if x < self.scale {
            0.0
        } else {
            self.shape / x * (self.scale / x).powf(self.shape)
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.scale {
            0.0
        } else {
            -(self.shape * (self.scale / x).ln()).exp_m1()
        }
    }

    /// `scale / (1 - p)^(1/shape)`, written so that the result is never
    /// below `scale`.
    fn quantile(&self, p: f64) -> f64 {
        self.scale * (-(-p).ln_1p() / self.shape).exp()
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRate(rate))
    }
}

/// Point where two exponential densities cross.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvCrossing {
    pub crossing_a: f64,
}

impl TvCrossing {
    /// `a = (ln l1 - ln l2) / (l1 - l2)`; requires `l1 != l2`.
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        check_rate(lambda1)?;
        check_rate(lambda2)?;
        if lambda1 == lambda2 {
            return Err(Error::InvalidRatio(1.0));
        }
        let (hi, lo) = if lambda1 >= lambda2 {
            (lambda1, lambda2)
        } else {
            (lambda2, lambda1)
        };
        let d = (hi - lo) / lo;
        Ok(Self {
            crossing_a: d.ln_1p() / (hi - lo),
        })
    }
}

/// `r^(-1/(r-1)) * (1 - 1/r)` written in terms of `d = r - 1`.
fn ratio_tv(d: f64) -> f64 {
    (-d.ln_1p() / d).exp() * (d / (1.0 + d))
}

/// Exact total variation between `Exp(lambda1)` and `Exp(lambda2)`.
pub fn exp_tv(lambda1: f64, lambda2: f64) -> Result<f64> {
    check_rate(lambda1)?;
    check_rate(lambda2)?;
    let (hi, lo) = if lambda1 >= lambda2 {
        (lambda1, lambda2)
    } else {
        (lambda2, lambda1)
    };
    if hi - lo < 1e-12 * hi {
        return Ok(0.0);
    }
    Ok(ratio_tv((hi - lo) / lo))
}

/// `T(r)`: TV between exponentials whose rates differ by the ratio `r >= 1`.
pub fn separation_t(r: f64) -> Result<f64> {
    if !(r >= 1.0) || r.is_infinite() {
        return Err(Error::InvalidRatio(r));
    }
    if r == 1.0 {
        return Ok(0.0);
    }
    Ok(ratio_tv(r - 1.0))
}

/// KL divergence between equal-scale Paretos with shapes `alpha1`, `alpha2`.
pub fn pareto_kl_equal_scale(alpha1: f64, alpha2: f64) -> Result<f64> {
    for a in [alpha1, alpha2] {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidShape(a));
        }
    }
    let u = alpha1 / alpha2;
    Ok((u - 1.0 - u.ln()).max(0.0))
}

/// Upper bound on TV between two Paretos: the exact equal-shape scale term
/// at the larger shape plus the Pinsker bound on the shape term. May
/// exceed 1.
pub fn pareto_tv_bound(a: &ParetoModel, b: &ParetoModel) -> f64 {
    let delta_s = (b.scale / a.scale).ln().abs();
    let (amin, amax) = if a.shape <= b.shape {
        (a.shape, b.shape)
    } else {
        (b.shape, a.shape)
    };
    let scale_term = -(-amax * delta_s).exp_m1();
    let kl = pareto_kl_equal_scale(amax, amin).unwrap_or(0.0);
    scale_term + (0.5 * kl).sqrt()
}
