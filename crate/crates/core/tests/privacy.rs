mod common;

use common::ks_statistic;
use dpexp::privacy::{sample_laplace, BudgetLedger};
use dpexp::{Error, NoiseScale, PrivacyBudget, RngStream, Session};
use proptest::prelude::*;

fn laplace_cdf(b: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        if x < 0.0 {
            0.5 * (x / b).exp()
        } else {
            1.0 - 0.5 * (-x / b).exp()
        }
    }
}

#[test]
fn laplace_moments() {
    let b = 0.7;
    let mut rng = RngStream::new(4, 2);
    let scale = NoiseScale::new(b).unwrap();
    let n = 400_000;
    let draws: Vec<f64> = (0..n).map(|_| sample_laplace(scale, &mut rng, false)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|z| z * z).sum::<f64>() / n as f64;
    // sd of the mean is sqrt(2) b / sqrt(n) ~ 0.0016
    assert!(mean.abs() < 0.007, "mean {mean}");
    assert!((var - 2.0 * b * b).abs() < 0.03, "var {var}");
    let d = ks_statistic(&draws, laplace_cdf(b));
    assert!(d < 0.005, "KS {d}");
}

#[test]
fn ledger_tree_accounting() {
    let mut ledger = BudgetLedger::new();
    let root = ledger.grant(PrivacyBudget::new(1.0, 1e-6).unwrap(), "root");
    let parts = ledger
        .split_exact(
            root,
            &[
                (PrivacyBudget::new(0.5, 1e-6).unwrap(), "a"),
                (PrivacyBudget::pure(0.5).unwrap(), "b"),
            ],
        )
        .unwrap();
    let sub = ledger.split(parts[1], &[1.0 / 3.0, 2.0 / 3.0], &["b1", "b2"]).unwrap();
    ledger.spend(parts[0]).unwrap();
    ledger.spend(sub[1]).unwrap();
    // partially spent tree reports only what was spent
    let spent = ledger.spent_under(root);
    assert_eq!(spent.delta, 1e-6);
    assert!((spent.epsilon - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
    ledger.spend(sub[0]).unwrap();
    assert_eq!(ledger.spent_under(root), PrivacyBudget::new(1.0, 1e-6).unwrap());
    assert_eq!(ledger.entries().len(), 3);
    assert!(matches!(ledger.spend(root), Err(Error::BudgetExhausted(_))));
}

#[test]
fn split_exact_rejects_mismatched_parts() {
    let mut ledger = BudgetLedger::new();
    let root = ledger.grant(PrivacyBudget::new(1.0, 1e-6).unwrap(), "root");
    let bad = [
        (PrivacyBudget::pure(0.5).unwrap(), "a"),
        (PrivacyBudget::pure(0.5).unwrap(), "b"),
    ];
    assert!(matches!(ledger.split_exact(root, &bad), Err(Error::BadSplit(_))));
    // a failed split leaves the node usable
    assert!(ledger.spend(root).is_ok());
}

#[test]
fn noiseless_session_is_deterministic() {
    let mut a = Session::new(RngStream::new(1, 0), true);
    let mut b = Session::new(RngStream::new(2, 9), true);
    let s = NoiseScale::new(3.0).unwrap();
    for _ in 0..10 {
        assert_eq!(a.noise().laplace(s), b.noise().laplace(s));
    }
    assert_eq!(a.noise_draws(), 10);
}

proptest! {
    #[test]
    fn splits_reproduce_parent_exactly(
        eps in 1e-3f64..100.0,
        delta in prop_oneof![Just(0.0), 1e-12f64..0.5],
        raw in prop::collection::vec(0.01f64..1.0, 1..6),
    ) {
        let total: f64 = raw.iter().sum();
        let mut fractions: Vec<f64> = raw.iter().map(|r| r / total).collect();
        // nudge so that the fractions sum within one ulp of 1
        let head: f64 = fractions[..fractions.len() - 1].iter().sum();
        let last = fractions.len() - 1;
        fractions[last] = 1.0 - head;
        prop_assume!(fractions[last] > 0.0);
        let parent = PrivacyBudget::new(eps, delta).unwrap();
        let parts = parent.split(&fractions).unwrap();
        let e: f64 = parts.iter().map(|p| p.epsilon).sum();
        let d: f64 = parts.iter().map(|p| p.delta).sum();
        prop_assert_eq!(e, eps);
        prop_assert_eq!(d, delta);
        // parts follow the fractions up to a few ulps of adjustment
        for (p, f) in parts.iter().zip(&fractions) {
            prop_assert!((p.epsilon - f * eps).abs() <= 1e-14 * eps);
            prop_assert!(p.epsilon > 0.0);
        }
    }

    #[test]
    fn laplace_is_symmetric_in_distribution(seed in 0u64..1000) {
        let mut rng = RngStream::new(seed, 0);
        let s = NoiseScale::new(1.0).unwrap();
        let positives = (0..2000).filter(|_| sample_laplace(s, &mut rng, false) > 0.0).count();
        // binomial(2000, 1/2): 5 sigma is about 112
        prop_assert!((positives as i64 - 1000).abs() < 112);
    }
}
