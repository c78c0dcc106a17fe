//! Differentially private learning of exponential and Pareto distributions.
//!
//! The exponential learners take data, a [`LearnerConfig`] and a budget
//! handle inside a [`Session`] (ledger plus seeded noise source):
//!
//! ```
//! use dpexp::{best_of_both, Continuous, ExpModel, LearnerConfig, PrivacyBudget, RateBounds, RngStream, Session};
//!
//! let mut rng = RngStream::new(42, 0);
//! let data = ExpModel::new(0.5).unwrap().sample(5_000, &mut rng).unwrap();
//! let config = LearnerConfig::new(0.2, 0.1, RateBounds::new(0.01, 100.0).unwrap()).unwrap();
//!
//! let mut session = Session::new(rng, false);
//! let budget = session.grant(PrivacyBudget::pure(1.0).unwrap(), "example");
//! let est = best_of_both(&data, &config, &mut session, budget).unwrap();
//! assert_eq!(est.budget_spent.epsilon, 1.0);
//! ```

pub mod analysis;
pub mod bounds_finder;
pub mod data;
pub mod distributions;
pub mod error;
pub mod exp_learners;
pub mod harness;
pub mod pareto_learner;
pub mod privacy;
pub mod quantile_svt;

pub use analysis::{build_packing, lower_bound_n, required_n, CalcInputs, PackingFamily, SampleSizeReport, TheoremId};
pub use bounds_finder::{find_bounds, learn_without_bounds, DyadicHistogram};
pub use data::Dataset;
pub use distributions::{exp_tv, pareto_kl_equal_scale, pareto_tv_bound, separation_t, Continuous, ExpModel, ParetoModel};
pub use error::{Error, Result};
pub use exp_learners::{best_of_both, mle_learning, private_mle, quantile_learning, Estimate, LearnerConfig, Route};
pub use pareto_learner::{learn_pareto, learn_pareto_known_scale, log_transform, ParetoEstimate};
pub use privacy::{BudgetId, BudgetLedger, NoiseScale, NoiseSource, PrivacyBudget, RngStream, Session};
pub use quantile_svt::{clipping_range, svt_quantile, QuantileResult, RateBounds};
