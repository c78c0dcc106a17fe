//! Shared test machinery: numeric quadrature, KS statistics, seeded data
//! generators, and brute-force reimplementations of every learner.
//!
//! The oracles deliberately avoid the library's helpers (sorted copies,
//! binary-search counting, bit-level binning) and recompute everything by
//! direct scans. Floating-point expressions that feed a comparison are
//! written in the same evaluation order as the algorithms' definitions, so
//! noiseless results can be compared bit for bit.

#![allow(dead_code)]

use dpexp::{Continuous, Dataset, ExpModel, RngStream};
use rand::Rng;

// ---------------------------------------------------------------- quadrature

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let pair = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss–Kronrod on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 || (b - a) <= 1e-300 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, tol / 2.0, depth - 1) + rec(f, m, b, tol / 2.0, depth - 1)
    }
    rec(f, a, b, tol, 60)
}

/// TV between two exponentials by quadrature of `|f1 - f2| / 2` over
/// log-spaced panels covering `[0, 80 / min(rate)]`.
pub fn numeric_tv(l1: f64, l2: f64) -> f64 {
    let f = |x: f64| 0.5 * (l1 * (-l1 * x).exp() - l2 * (-l2 * x).exp()).abs();
    let lo = 1e-3 / l1.max(l2);
    let hi = 80.0 / l1.min(l2);
    let mut total = integrate(&f, 0.0, lo, 1e-15);
    let panels = 400;
    let ratio = (hi / lo).ln() / panels as f64;
    let mut a = lo;
    for i in 1..=panels {
        let b = lo * (ratio * i as f64).exp();
        total += integrate(&f, a, b, 1e-14);
        a = b;
    }
    total
}

// ---------------------------------------------------------------- statistics

/// Two-sided Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            f64::max(c - i as f64 / n, (i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- data

/// Small random datasets of mixed character: exponential draws at a random
/// log-uniform rate, occasionally with repeated values and exact zeros.
pub fn random_small_dataset(rng: &mut RngStream, max_n: usize) -> Dataset {
    let n = rng.gen_range(1..=max_n);
    let rate = 10f64.powf(rng.gen_range(-2.0..2.0));
    let model = ExpModel::new(rate).unwrap();
    let mut values: Vec<f64> = (0..n).map(|_| model.quantile(rng.gen::<f64>())).collect();
    match rng.gen_range(0..6) {
        0 => {
            let v = values[0];
            for x in values.iter_mut().step_by(2) {
                *x = v;
            }
        }
        1 => {
            for x in values.iter_mut().take(n / 3) {
                *x = 0.0;
            }
        }
        2 => {
            // values on exact powers of two exercise the bin boundaries
            for x in values.iter_mut() {
                *x = (x.max(1e-300)).log2().round().exp2();
            }
        }
        _ => {}
    }
    Dataset::new(values).unwrap()
}

pub fn stratified_exp(rate: f64, n: usize) -> Dataset {
    let m = ExpModel::new(rate).unwrap();
    Dataset::new((0..n).map(|i| m.quantile((i as f64 + 0.5) / n as f64)).collect()).unwrap()
}

// ---------------------------------------------------------------- oracles

/// Oracle failures, named like the library's error variants.
pub type Oracle<T> = Result<T, &'static str>;

fn count_below(values: &[f64], t: f64) -> usize {
    let mut c = 0;
    for &x in values {
        if x < t {
            c += 1;
        }
    }
    c
}

fn frac_below(values: &[f64], t: f64) -> f64 {
    count_below(values, t) as f64 / values.len() as f64
}

/// Noiseless SVT quantile: the first dyadic point `2^i / lambda_max` whose
/// empirical CDF reaches `1 - theta`.
pub fn svt_oracle(values: &[f64], lambda_min: f64, lambda_max: f64, theta: f64) -> Option<f64> {
    let span = (lambda_max / lambda_min).log2().ceil().max(0.0) as usize;
    let pad = f64::max(1.0, (1.0 / theta).ln()).log2().ceil() as usize;
    for i in 0..=(span + pad + 2) {
        let point = 2f64.powi(i as i32) / lambda_max;
        if frac_below(values, point) >= 1.0 - theta {
            return Some(point);
        }
    }
    None
}

pub fn mle_oracle(values: &[f64], clip: f64) -> Oracle<f64> {
    let mut sum = 0.0;
    for &x in values {
        sum += if x < clip { x } else { clip };
    }
    let mean = sum / values.len() as f64;
    if mean <= 0.0 {
        return Err("NonpositiveMean");
    }
    Ok(1.0 / mean)
}

pub fn mle_learning_oracle(values: &[f64], alpha: f64, beta: f64, lmin: f64, lmax: f64) -> Oracle<f64> {
    let _ = alpha;
    let q = svt_oracle(values, lmin, lmax, 0.1).ok_or("RangeEstimationFailed")?;
    if values.len() < 2 {
        return Err("TooFewSamples");
    }
    let ln_n = (values.len() as f64).ln();
    let c = 6.0 / (1.0 / 0.1f64).ln() * (1.0 + (1.0 / beta).ln() / ln_n);
    mle_oracle(values, c * q * ln_n)
}

/// Noiseless binary search over `(1/(1 - alpha/2))^j / lambda_max`.
pub fn quantile_oracle(values: &[f64], alpha: f64, lmin: f64, lmax: f64) -> Oracle<f64> {
    let step = 1.0 / (1.0 - alpha / 2.0);
    let last = ((lmax / lmin).ln() / step.ln()).ceil().max(1.0) as usize;
    let iterations = ((last + 1) as f64).log2().ceil().max(1.0) as usize;
    let inv_e = (-1.0f64).exp();
    let hi = (1.0 - inv_e) + alpha * inv_e / 2.0;
    let lo = (1.0 - inv_e) - alpha * inv_e / 2.0;
    let (mut l, mut u) = (0usize, last);
    for _ in 0..iterations {
        let m = (l + u) / 2;
        let q = step.powi(m as i32) / lmax;
        let f = frac_below(values, q);
        if f > hi {
            u = m;
        } else if f < lo {
            l = m;
        } else {
            return Ok(1.0 / q);
        }
    }
    Err("SearchExhausted")
}

/// `(coarse, refined, took_mle_route)`.
pub fn best_of_both_oracle(
    values: &[f64],
    alpha: f64,
    beta: f64,
    lmin: f64,
    lmax: f64,
) -> Oracle<(f64, f64, bool)> {
    let coarse = quantile_oracle(values, 0.5, lmin, lmax).map_err(|_| "CoarseFailed")?;
    if coarse >= 2.0 {
        Ok((coarse, mle_learning_oracle(values, alpha, beta, lmin, lmax)?, true))
    } else {
        Ok((coarse, quantile_oracle(values, alpha, lmin, lmax)?, false))
    }
}

/// `floor(log2 x)` by correction of the float log; zero goes to -1074.
pub fn bin_oracle(x: f64) -> i32 {
    if x == 0.0 {
        return -1074;
    }
    let mut k = x.log2().floor() as i32;
    while 2f64.powi(k) > x {
        k -= 1;
    }
    while 2f64.powi(k + 1) <= x {
        k += 1;
    }
    k
}

pub fn bounds_oracle(values: &[f64], epsilon: f64, delta: f64) -> Oracle<(f64, f64)> {
    let n = values.len() as f64;
    let threshold = 2.0 / (epsilon * n) * (2.0 / delta).ln() + 1.0 / n;
    let mut bins: Vec<i32> = values.iter().map(|&x| bin_oracle(x)).collect();
    bins.sort();
    bins.dedup();
    let mut best: Option<(i32, f64)> = None;
    for k in bins {
        let c = values.iter().filter(|&&x| bin_oracle(x) == k).count() as f64 / n;
        if c >= threshold && best.map_or(true, |(_, b)| c > b) {
            best = Some((k, c));
        }
    }
    let (k, _) = best.ok_or("NoBinSurvived")?;
    let lo = std::f64::consts::LN_2 / 2f64.powi(k + 1);
    let hi = std::f64::consts::LN_2 / 2f64.powi(k - 1);
    if !(lo >= f64::MIN_POSITIVE && hi.is_finite()) {
        return Err("BoundsOverflow");
    }
    Ok((lo, hi))
}

pub fn without_bounds_oracle(values: &[f64], alpha: f64, beta: f64, epsilon: f64, delta: f64) -> Oracle<f64> {
    let (lo, hi) = bounds_oracle(values, epsilon / 2.0, delta)?;
    best_of_both_oracle(values, alpha, beta, lo, hi).map(|r| r.1)
}

pub fn log_tail(values: &[f64], pivot: f64) -> Vec<f64> {
    values.iter().filter(|&&x| x >= pivot).map(|&x| (x / pivot).ln()).collect()
}

/// `(shape, scale)` of the full Pareto pipeline.
pub fn pareto_oracle(values: &[f64], alpha: f64, beta: f64, lmin: f64, lmax: f64, tau: f64) -> Oracle<(f64, f64)> {
    let pivot = svt_oracle(values, lmin, lmax, 1.0 - tau).ok_or("RangeEstimationFailed")?;
    let tail = log_tail(values, pivot);
    if tail.is_empty() {
        return Err("EmptyTail");
    }
    let (_, shape, _) = best_of_both_oracle(&tail, alpha, beta, lmin, lmax)?;
    Ok((shape, pivot * (1.0 - tau).powf(1.0 / shape)))
}
