mod common;

use common::{ks_statistic, numeric_tv};
use dpexp::distributions::TvCrossing;
use dpexp::{exp_tv, pareto_kl_equal_scale, pareto_tv_bound, separation_t, Continuous, ExpModel, ParetoModel, RngStream};
use proptest::prelude::*;

#[test]
fn exact_tv_matches_quadrature_on_spot_checks() {
    for (l1, l2) in [(1.0, 2.0), (0.5, 0.55), (1e-3, 1e3), (7.0, 0.01), (3.0, 3.0 * (1.0 + 1e-6))] {
        let exact = exp_tv(l1, l2).unwrap();
        let numeric = numeric_tv(l1, l2);
        assert!((exact - numeric).abs() < 1e-9, "{l1} {l2}: {exact} vs {numeric}");
    }
}

#[test]
fn tv_identity_and_near_identity() {
    assert_eq!(exp_tv(2.5, 2.5).unwrap(), 0.0);
    // relative gaps below 1e-12 are reported as exactly zero
    assert_eq!(exp_tv(1.0, 1.0 + 1e-13).unwrap(), 0.0);
    assert!(exp_tv(1.0, 1.0 + 1e-9).unwrap() > 0.0);
}

#[test]
fn exponential_sampler_ks() {
    let model = ExpModel::new(2.0).unwrap();
    let mut rng = RngStream::new(17, 0);
    let data = model.sample(100_000, &mut rng).unwrap();
    let d = ks_statistic(data.values(), |x| model.cdf(x));
    // 99.9% KS critical value at n = 1e5 is about 1.95 / sqrt(n) = 0.0062
    assert!(d < 0.0062, "KS = {d}");
    assert!(data.values().iter().all(|&x| x >= 0.0));
}

#[test]
fn pareto_sampler_ks_and_support() {
    let model = ParetoModel::new(2.0, 3.0).unwrap();
    let mut rng = RngStream::new(18, 0);
    let data = model.sample(100_000, &mut rng).unwrap();
    assert!(data.sorted()[0] >= 2.0);
    let d = ks_statistic(data.values(), |x| model.cdf(x));
    assert!(d < 0.0062, "KS = {d}");
}

#[test]
fn pareto_tail_log_is_exponential() {
    // conditioned on X >= t = 2 x_m, ln(X/t) ~ Exp(shape)
    let (x_m, shape) = (1.5, 2.5);
    let model = ParetoModel::new(x_m, shape).unwrap();
    let mut rng = RngStream::new(19, 0);
    let t = 2.0 * x_m;
    let mut tail = Vec::new();
    while tail.len() < 100_000 {
        let x = model.quantile(rand::Rng::gen::<f64>(&mut rng));
        if x >= t {
            tail.push((x / t).ln());
        }
    }
    let exp = ExpModel::new(shape).unwrap();
    let d = ks_statistic(&tail, |y| exp.cdf(y));
    assert!(d < 0.01, "KS = {d}");
}

#[test]
fn separation_exceeds_alpha_at_factor_eight() {
    for i in 1..1000 {
        let alpha = 0.001 + 0.498 * i as f64 / 1000.0;
        assert!(separation_t(1.0 + 8.0 * alpha).unwrap() >= alpha, "alpha={alpha}");
    }
}

#[test]
fn pareto_kl_is_asymmetric_but_nonnegative() {
    let a = pareto_kl_equal_scale(3.0, 1.0).unwrap();
    let b = pareto_kl_equal_scale(1.0, 3.0).unwrap();
    assert!(a > 0.0 && b > 0.0 && (a - b).abs() > 0.1);
}

#[test]
fn pareto_tv_bound_covers_scale_only_case() {
    // equal shapes: the bound is the exact TV 1 - (s1/s2)^shape
    let p = ParetoModel::new(1.0, 2.0).unwrap();
    let q = ParetoModel::new(1.1, 2.0).unwrap();
    let exact = 1.0 - (1.0f64 / 1.1).powf(2.0);
    assert!((pareto_tv_bound(&p, &q) - exact).abs() < 1e-14);
}

proptest! {
    #[test]
    fn tv_is_symmetric_and_in_unit_interval(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (l1, l2) = (10f64.powf(a), 10f64.powf(b));
        let t = exp_tv(l1, l2).unwrap();
        prop_assert_eq!(t, exp_tv(l2, l1).unwrap());
        prop_assert!((0.0..1.0).contains(&t));
    }

    #[test]
    fn tv_depends_only_on_ratio(a in -2.0f64..2.0, r in 1.0001f64..50.0, s in -2.0f64..2.0) {
        let l = 10f64.powf(a);
        let k = 10f64.powf(s);
        let t1 = exp_tv(l * r, l).unwrap();
        let t2 = exp_tv(k * l * r, k * l).unwrap();
        prop_assert!((t1 - t2).abs() < 1e-12);
        prop_assert!((t1 - separation_t(r).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tv_monotone_in_ratio(r in 1.0f64..100.0, dr in 1e-6f64..10.0) {
        prop_assert!(separation_t(r + dr).unwrap() >= separation_t(r).unwrap());
    }

    #[test]
    fn crossing_densities_meet(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (l1, l2) = (10f64.powf(a), 10f64.powf(b));
        prop_assume!((l1 - l2).abs() > 1e-9 * l1.max(l2));
        let x = TvCrossing::new(l1, l2).unwrap().crossing_a;
        let (f1, f2) = (l1 * (-l1 * x).exp(), l2 * (-l2 * x).exp());
        prop_assert!((f1 - f2).abs() <= 1e-9 * f1.max(f2));
    }

    #[test]
    fn quantile_inverts_cdf(p in 1e-9f64..0.999_999, rate in 0.01f64..100.0, shape in 0.1f64..10.0) {
        let e = ExpModel::new(rate).unwrap();
        prop_assert!((e.cdf(e.quantile(p)) - p).abs() < 1e-12);
        let par = ParetoModel::new(1.0 / rate, shape).unwrap();
        prop_assert!((par.cdf(par.quantile(p)) - p).abs() < 1e-12);
    }
}
