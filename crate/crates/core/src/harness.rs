//! Seeded Monte Carlo experiments over every learner, sample-size sweeps,
//! and the newline-delimited data file format.
//!
//! Trial `i` draws its sample and all of its noise from
//! `RngStream(base_seed, i)`, so a trial's record depends only on the spec and
//! `i`: trials run in parallel and are collected in trial order, and the
//! serialized output is byte-identical across runs. Wall-clock time is kept
//! on the records but never serialized.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{required_n, CalcInputs, TheoremId};
use crate::bounds_finder::{find_bounds, learn_without_bounds};
use crate::data::Dataset;
use crate::distributions::{Continuous, ExpModel, ParetoModel};
use crate::error::{Error, Result};
use crate::exp_learners::{best_of_both, mle_learning, private_mle, quantile_learning, LearnerConfig, Route};
use crate::pareto_learner::{learn_pareto, learn_pareto_known_scale, ParetoEstimate};
use crate::privacy::{BudgetId, LedgerEntry, PrivacyBudget, RngStream, Session};

pub const DEFAULT_SAFETY_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LearnerKind {
    MleLearning,
    QuantileLearning,
    BestOfBoth,
    BoundsFinder,
    WithoutBounds,
    ParetoFull,
    ParetoKnownScale,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 7] = [
        LearnerKind::MleLearning,
        LearnerKind::QuantileLearning,
        LearnerKind::BestOfBoth,
        LearnerKind::BoundsFinder,
        LearnerKind::WithoutBounds,
        LearnerKind::ParetoFull,
        LearnerKind::ParetoKnownScale,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            LearnerKind::MleLearning => "mle",
            LearnerKind::QuantileLearning => "quantile",
            LearnerKind::BestOfBoth => "best-of-both",
            LearnerKind::BoundsFinder => "bounds",
            LearnerKind::WithoutBounds => "without-bounds",
            LearnerKind::ParetoFull => "pareto",
            LearnerKind::ParetoKnownScale => "pareto-known-scale",
        }
    }

    pub fn is_pareto(self) -> bool {
        matches!(self, LearnerKind::ParetoFull | LearnerKind::ParetoKnownScale)
    }

    pub fn needs_delta(self) -> bool {
        matches!(self, LearnerKind::BoundsFinder | LearnerKind::WithoutBounds)
    }

    /// Calculator used to size experiments for this learner.
    pub fn sizing_theorem(self) -> TheoremId {
        match self {
            LearnerKind::MleLearning | LearnerKind::ParetoKnownScale => TheoremId::Thm34,
            LearnerKind::QuantileLearning => TheoremId::Thm310,
            LearnerKind::BestOfBoth => TheoremId::Thm311,
            LearnerKind::BoundsFinder => TheoremId::Lem61,
            LearnerKind::WithoutBounds => TheoremId::Thm62,
            LearnerKind::ParetoFull => TheoremId::ParetoB6,
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        LearnerKind::ALL
            .iter()
            .copied()
            .find(|k| k.cli_name() == s || format!("{k:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = LearnerKind::ALL.iter().map(|k| k.cli_name()).collect();
                format!("unknown learner `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrueParams {
    Exponential { lambda: f64 },
    Pareto { scale: f64, shape: f64 },
}

impl TrueParams {
    /// The parameter the learners estimate: the rate, or the Pareto shape.
    pub fn target(&self) -> f64 {
        match *self {
            TrueParams::Exponential { lambda } => lambda,
            TrueParams::Pareto { shape, .. } => shape,
        }
    }

    fn sample(&self, n: usize, stratified: bool, rng: &mut RngStream) -> Result<Dataset> {
        match *self {
            TrueParams::Exponential { lambda } => draw(&ExpModel::new(lambda)?, n, stratified, rng),
            TrueParams::Pareto { scale, shape } => draw(&ParetoModel::new(scale, shape)?, n, stratified, rng),
        }
    }
}

fn draw<M: Continuous>(model: &M, n: usize, stratified: bool, rng: &mut RngStream) -> Result<Dataset> {
    if stratified {
        stratified_sample(model, n)
    } else {
        model.sample(n, rng)
    }
}

/// Deterministic sample `quantile((i + 1/2) / n)`, `i = 0..n`.
pub fn stratified_sample<M: Continuous>(model: &M, n: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyRequest);
    }
    Dataset::new(
        (0..n)
            .map(|i| model.quantile((i as f64 + 0.5) / n as f64))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub learner: LearnerKind,
    pub true_params: TrueParams,
    pub config: LearnerConfig,
    pub budget: PrivacyBudget,
    pub n: usize,
    pub trials: usize,
    pub base_seed: u64,
    /// Zero privacy noise and a stratified (deterministic) sample.
    pub noiseless: bool,
    /// Tail quantile level for [`LearnerKind::ParetoFull`].
    pub tau: f64,
    pub safety_factor: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyRequest);
        }
        if self.trials == 0 {
            return Err(Error::OutOfRegime {
                name: "trials",
                value: 0.0,
                regime: ">= 1",
            });
        }
        if !(self.safety_factor.is_finite() && self.safety_factor > 0.0) {
            return Err(Error::OutOfRegime {
                name: "safety_factor",
                value: self.safety_factor,
                regime: "(0, inf)",
            });
        }
        let pareto_params = matches!(self.true_params, TrueParams::Pareto { .. });
        if pareto_params != self.learner.is_pareto() {
            return Err(Error::RegimeViolation(format!(
                "learner `{}` does not match the {} parameters",
                self.learner,
                if pareto_params { "Pareto" } else { "exponential" }
            )));
        }
        if self.learner.needs_delta() == self.budget.is_pure() {
            return if self.learner.needs_delta() {
                Err(Error::RequiresApproxDp)
            } else {
                Err(Error::RequiresPureDp(self.budget.delta))
            };
        }
        Ok(())
    }

    /// Calculator inputs for sizing this experiment.
    pub fn calc_inputs(&self) -> CalcInputs {
        CalcInputs {
            alpha: Some(self.config.alpha),
            beta: Some(self.config.beta),
            epsilon: Some(self.budget.epsilon),
            delta: Some(self.budget.delta).filter(|d| *d > 0.0),
            lambda: Some(self.true_params.target()),
            bounds: Some(self.config.bounds),
            clip_r: None,
            tau: Some(self.tau),
        }
    }

    /// `ceil(safety_factor * calculator)` for this learner.
    pub fn sized_n(&self) -> Result<usize> {
        let report = required_n(self.learner.sizing_theorem(), &self.calc_inputs())?;
        Ok((self.safety_factor * report.value).ceil().max(1.0) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialEstimate {
    Rate {
        lambda_hat: f64,
        route: Route,
        coarse_estimate: Option<f64>,
    },
    Bounds {
        lambda_min: f64,
        lambda_max: f64,
    },
    Pareto {
        shape_hat: f64,
        scale_hat: f64,
        pivot: f64,
        tail_count: usize,
        route: Route,
    },
}

impl TrialEstimate {
    /// The point estimate of the target parameter, if the learner gives one.
    pub fn point(&self) -> Option<f64> {
        match *self {
            TrialEstimate::Rate { lambda_hat, .. } => Some(lambda_hat),
            TrialEstimate::Pareto { shape_hat, .. } => Some(shape_hat),
            TrialEstimate::Bounds { .. } => None,
        }
    }

    pub fn route(&self) -> Option<Route> {
        match *self {
            TrialEstimate::Rate { route, .. } | TrialEstimate::Pareto { route, .. } => Some(route),
            TrialEstimate::Bounds { .. } => None,
        }
    }
}

impl From<ParetoEstimate> for TrialEstimate {
    fn from(p: ParetoEstimate) -> Self {
        TrialEstimate::Pareto {
            shape_hat: p.shape_hat,
            scale_hat: p.scale_hat,
            pivot: p.pivot,
            tail_count: p.tail_count,
            route: p.route,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Success,
    MissedTolerance,
    TypedFailure(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub outcome: Outcome,
    pub estimate: Option<TrialEstimate>,
    #[serde(skip)]
    pub wall_time_us: u64,
}

impl PartialEq for TrialRecord {
    /// Timing is not part of a trial's result.
    fn eq(&self, other: &Self) -> bool {
        self.trial_id == other.trial_id && self.outcome == other.outcome && self.estimate == other.estimate
    }
}

/// Runs the spec's learner on `data`, spending `root`.
pub fn run_learner(
    spec: &ExperimentSpec,
    data: &Dataset,
    session: &mut Session,
    root: BudgetId,
) -> Result<TrialEstimate> {
    let rate = |e: crate::exp_learners::Estimate| TrialEstimate::Rate {
        lambda_hat: e.lambda_hat,
        route: e.route,
        coarse_estimate: e.coarse_estimate,
    };
    Ok(match spec.learner {
        LearnerKind::MleLearning => rate(mle_learning(data, &spec.config, session, root)?),
        LearnerKind::QuantileLearning => rate(quantile_learning(data, &spec.config, session, root)?),
        LearnerKind::BestOfBoth => rate(best_of_both(data, &spec.config, session, root)?),
        LearnerKind::WithoutBounds => rate(learn_without_bounds(
            data,
            spec.config.alpha,
            spec.config.beta,
            session,
            root,
        )?),
        LearnerKind::BoundsFinder => {
            let b = find_bounds(data, session, root)?;
            TrialEstimate::Bounds {
                lambda_min: b.lambda_min(),
                lambda_max: b.lambda_max(),
            }
        }
        LearnerKind::ParetoFull => learn_pareto(data, &spec.config, spec.tau, session, root)?.into(),
        LearnerKind::ParetoKnownScale => {
            let TrueParams::Pareto { scale, .. } = spec.true_params else {
                return Err(Error::RegimeViolation("known-scale learner needs Pareto parameters".into()));
            };
            learn_pareto_known_scale(data, scale, &spec.config, session, root)?.into()
        }
    })
}

/// Upper limit on `scale_hat / x_m`: `exp(2 ln 7 (alpha / shape) tau)`.
pub fn pareto_scale_tolerance(alpha: f64, shape: f64, tau: f64) -> f64 {
    (2.0 * 7f64.ln() * (alpha / shape) * tau).exp()
}

/// The multiplicative success band (and the scale condition for the full
/// Pareto learner, the coverage condition for the bounds finder).
pub fn is_success(spec: &ExperimentSpec, estimate: &TrialEstimate) -> bool {
    let alpha = spec.config.alpha;
    let target = spec.true_params.target();
    let in_band = |x: f64| (1.0 - alpha) * target <= x && x <= (1.0 + alpha) * target;
    match *estimate {
        TrialEstimate::Rate { lambda_hat, .. } => in_band(lambda_hat),
        TrialEstimate::Bounds { lambda_min, lambda_max } => lambda_min < target && target < lambda_max,
        TrialEstimate::Pareto { shape_hat, scale_hat, .. } => {
            let TrueParams::Pareto { scale, shape } = spec.true_params else {
                return false;
            };
            in_band(shape_hat)
                && (spec.learner == LearnerKind::ParetoKnownScale
                    || scale_hat / scale <= pareto_scale_tolerance(alpha, shape, spec.tau))
        }
    }
}

pub fn run_trial(spec: &ExperimentSpec, trial_id: usize) -> TrialRecord {
    let start = Instant::now();
    let mut rng = RngStream::new(spec.base_seed, trial_id as u64);
    let result = spec
        .true_params
        .sample(spec.n, spec.noiseless, &mut rng)
        .and_then(|data| {
            let mut session = Session::new(rng, spec.noiseless);
            let root = session.grant(spec.budget, spec.learner.cli_name());
            run_learner(spec, &data, &mut session, root)
        });
    let (outcome, estimate) = match result {
        Ok(est) if is_success(spec, &est) => (Outcome::Success, Some(est)),
        Ok(est) => (Outcome::MissedTolerance, Some(est)),
        Err(e) => (Outcome::TypedFailure(e.name().to_string()), None),
    };
    TrialRecord {
        trial_id,
        outcome,
        estimate,
        wall_time_us: start.elapsed().as_micros() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub spec: ExperimentSpec,
    pub success_rate: f64,
    pub successes: usize,
    pub missed_tolerance: usize,
    pub failure_breakdown: BTreeMap<String, usize>,
    pub route_counts: BTreeMap<String, usize>,
    pub mean_estimate: Option<f64>,
    pub median_estimate: Option<f64>,
    pub records: Vec<TrialRecord>,
}

impl ExperimentSummary {
    pub fn route_fraction(&self, route: Route) -> f64 {
        let count = self.route_counts.get(&format!("{route:?}")).copied().unwrap_or(0);
        count as f64 / self.spec.trials as f64
    }

    pub fn total_wall_time_us(&self) -> u64 {
        self.records.iter().map(|r| r.wall_time_us).sum()
    }
}

fn summarize(spec: &ExperimentSpec, records: Vec<TrialRecord>) -> ExperimentSummary {
    let mut failure_breakdown = BTreeMap::new();
    let mut route_counts = BTreeMap::new();
    let (mut successes, mut missed) = (0, 0);
    let mut points = Vec::new();
    for r in &records {
        match &r.outcome {
            Outcome::Success => successes += 1,
            Outcome::MissedTolerance => missed += 1,
            Outcome::TypedFailure(name) => *failure_breakdown.entry(name.clone()).or_insert(0) += 1,
        }
        if let Some(est) = &r.estimate {
            if let Some(route) = est.route() {
                *route_counts.entry(format!("{route:?}")).or_insert(0) += 1;
            }
            points.extend(est.point());
        }
    }
    let mean_estimate = (!points.is_empty()).then(|| points.iter().sum::<f64>() / points.len() as f64);
    points.sort_by(f64::total_cmp);
    let median_estimate = (!points.is_empty()).then(|| {
        let m = points.len() / 2;
        if points.len() % 2 == 1 {
            points[m]
        } else {
            (points[m - 1] + points[m]) / 2.0
        }
    });
    ExperimentSummary {
        spec: spec.clone(),
        success_rate: successes as f64 / spec.trials as f64,
        successes,
        missed_tolerance: missed,
        failure_breakdown,
        route_counts,
        mean_estimate,
        median_estimate,
        records,
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentSummary> {
    spec.validate()?;
    let records: Vec<TrialRecord> = (0..spec.trials).into_par_iter().map(|i| run_trial(spec, i)).collect();
    Ok(summarize(spec, records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub success_rate: f64,
    pub trials: usize,
    pub seed: u64,
}

/// One experiment per `n`, all with the template's seed.
pub fn sweep(template: &ExperimentSpec, n_values: &[usize]) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() {
        return Err(Error::EmptyRequest);
    }
    n_values
        .iter()
        .map(|&n| {
            let spec = ExperimentSpec { n, ..template.clone() };
            let summary = run_experiment(&spec)?;
            Ok(SweepRow {
                n,
                success_rate: summary.success_rate,
                trials: spec.trials,
                seed: spec.base_seed,
            })
        })
        .collect()
}

/// CSV with header `n,success_rate,trials,seed`.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Newline-delimited decimal floats; blank lines and `#` lines are skipped.
pub fn parse_data(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Input {
            line: i + 1,
            message: format!("`{line}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::Input {
                line: i + 1,
                message: format!("`{line}` is not finite"),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(values)
}

pub fn read_data_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_data(&text)
}

/// Data file contents: a `# seed=...` provenance header, then one value per
/// line in shortest round-trip form.
pub fn format_data(seed: u64, description: &str, values: &[f64]) -> String {
    let mut out = format!("# seed={seed}\n# {description}\n");
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    out
}

/// Result of a single learner run on user data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub learner: LearnerKind,
    pub n: usize,
    pub estimate: TrialEstimate,
    pub route: Option<Route>,
    pub budget_spent: PrivacyBudget,
    pub ledger: Vec<LedgerEntry>,
}

/// Runs the learner once on `values`. With `clip_r`, the MLE learner skips
/// range estimation and runs the private MLE at the given clipping range.
pub fn estimate_values(
    values: Vec<f64>,
    spec: &ExperimentSpec,
    clip_r: Option<f64>,
) -> Result<EstimateReport> {
    if spec.learner.is_pareto() {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::InvalidData { index, value });
        }
    }
    let data = Dataset::new(values)?;
    let mut session = Session::new(RngStream::new(spec.base_seed, 0), spec.noiseless);
    let root = session.grant(spec.budget, spec.learner.cli_name());
    let estimate = match (spec.learner, clip_r) {
        (LearnerKind::MleLearning, Some(r)) => {
            TrialEstimate::Rate {
                lambda_hat: private_mle(&data, r, &mut session, root)?,
                route: Route::MleRoute,
                coarse_estimate: None,
            }
        }
        (_, Some(_)) => {
            return Err(Error::RegimeViolation("a fixed clipping range applies to the mle learner only".into()))
        }
        _ => run_learner(spec, &data, &mut session, root)?,
    };
    Ok(EstimateReport {
        learner: spec.learner,
        n: data.len(),
        route: estimate.route(),
        estimate,
        budget_spent: session.ledger().spent_under(root),
        ledger: session.ledger().entries(),
    })
}
