use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dpexp::analysis::{build_packing, lower_bound_n, required_n, CalcInputs, TheoremId};
use dpexp::distributions::{Continuous, ExpModel, ParetoModel};
use dpexp::exp_learners::LearnerConfig;
use dpexp::harness::{
    csv_string, estimate_values, format_data, read_data_file, run_experiment, sweep, ExperimentSpec, LearnerKind,
    SweepRow, TrueParams, DEFAULT_SAFETY_FACTOR,
};
use dpexp::pareto_learner::default_tau;
use dpexp::privacy::{PrivacyBudget, RngStream};
use dpexp::quantile_svt::RateBounds;
use dpexp::Error;

#[derive(Parser)]
#[command(name = "dpexp", version, about = "Private exponential/Pareto learners and Monte Carlo harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a data file (one value per line, `# seed=...` header).
    Gen(GenArgs),
    /// Run one learner on a data file and print JSON.
    Estimate(EstimateArgs),
    /// Monte Carlo success rate at a single n.
    Experiment(ExperimentArgs),
    /// Success rate over several n, as CSV.
    Sweep(ExperimentArgs),
    /// Evaluate a sample-size calculator.
    Calc(CalcArgs),
    /// Packing lower bound on n.
    Lowerbound(LowerArgs),
    /// Build the TV-separated packing family.
    Packing(PackingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Exp,
    Pareto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda_min: f64,
    #[arg(long, default_value_t = 100.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Zero all privacy noise (experiments also use a stratified sample).
    #[arg(long)]
    noiseless: bool,
    /// Tail quantile level for the Pareto learner [default: 1/(4 ln 7)].
    #[arg(long)]
    tau: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<LearnerConfig, Error> {
        LearnerConfig::new(self.alpha, self.beta, RateBounds::new(self.lambda_min, self.lambda_max)?)
    }

    fn budget(&self) -> Result<PrivacyBudget, Error> {
        PrivacyBudget::new(self.epsilon, self.delta)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "exp")]
    dist: Dist,
    /// Exponential rate.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Pareto scale x_m.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Pareto shape.
    #[arg(long, default_value_t = 2.0)]
    shape: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Data file: one value per line, `#` lines ignored.
    file: PathBuf,
    #[arg(long, default_value = "best-of-both")]
    learner: LearnerKind,
    /// Known Pareto scale (pareto-known-scale learner).
    #[arg(long)]
    scale: Option<f64>,
    /// Fixed clipping range: run only the private MLE (mle learner).
    #[arg(long)]
    clip_r: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "best-of-both")]
    learner: LearnerKind,
    /// True rate (exponential learners).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// True Pareto scale.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// True Pareto shape.
    #[arg(long, default_value_t = 2.0)]
    shape: f64,
    /// Sample size(s); comma-separated for `sweep`. Default: safety factor
    /// times the learner's calculator.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SAFETY_FACTOR)]
    safety_factor: f64,
    /// Output format (`sweep` always writes CSV).
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CalcArgs {
    #[arg(long)]
    theorem: TheoremId,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// True rate (Pareto: true shape).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Clipping range for Lem36.
    #[arg(long)]
    clip_r: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Also report ceil(safety_factor * value).
    #[arg(long)]
    safety_factor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LowerArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    lambda_min: f64,
    #[arg(long)]
    lambda_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PackingArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    lambda_min: f64,
    #[arg(long)]
    lambda_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Io(e.to_string()))
}

fn gen(args: GenArgs) -> Result<(), Error> {
    let mut rng = RngStream::new(args.seed, 0);
    let (data, description) = match args.dist {
        Dist::Exp => (
            ExpModel::new(args.lambda)?.sample(args.n, &mut rng)?,
            format!("exp lambda={}", args.lambda),
        ),
        Dist::Pareto => (
            ParetoModel::new(args.scale, args.shape)?.sample(args.n, &mut rng)?,
            format!("pareto scale={} shape={}", args.scale, args.shape),
        ),
    };
    emit(args.out.as_ref(), &format_data(args.seed, &description, data.values()))
}

fn true_params(learner: LearnerKind, lambda: f64, scale: f64, shape: f64) -> TrueParams {
    if learner.is_pareto() {
        TrueParams::Pareto { scale, shape }
    } else {
        TrueParams::Exponential { lambda }
    }
}

fn estimate(args: EstimateArgs) -> Result<(), Error> {
    let values = read_data_file(&args.file)?;
    let c = &args.common;
    let scale = match (args.learner, args.scale) {
        (LearnerKind::ParetoKnownScale, None) => {
            return Err(Error::IncompleteInputs("--scale (known Pareto scale)"));
        }
        (_, s) => s.unwrap_or(1.0),
    };
    let spec = ExperimentSpec {
        learner: args.learner,
        true_params: true_params(args.learner, 1.0, scale, 1.0),
        config: c.config()?,
        budget: c.budget()?,
        n: values.len(),
        trials: 1,
        base_seed: c.seed,
        noiseless: c.noiseless,
        tau: c.tau.unwrap_or_else(default_tau),
        safety_factor: DEFAULT_SAFETY_FACTOR,
    };
    let report = estimate_values(values, &spec, args.clip_r)?;
    emit(c.out.as_ref(), &to_json(&report)?)
}

fn experiment_spec(args: &ExperimentArgs, n: usize) -> Result<ExperimentSpec, Error> {
    let c = &args.common;
    let spec = ExperimentSpec {
        learner: args.learner,
        true_params: true_params(args.learner, args.lambda, args.scale, args.shape),
        config: c.config()?,
        budget: c.budget()?,
        n,
        trials: args.trials,
        base_seed: c.seed,
        noiseless: c.noiseless,
        tau: c.tau.unwrap_or_else(default_tau),
        safety_factor: args.safety_factor,
    };
    if n == 0 {
        let n = spec.sized_n()?;
        return Ok(ExperimentSpec { n, ..spec });
    }
    Ok(spec)
}

fn experiment(args: ExperimentArgs) -> Result<(), Error> {
    if args.n.len() > 1 {
        return Err(Error::RegimeViolation("experiment takes a single --n; use sweep".into()));
    }
    let spec = experiment_spec(&args, args.n.first().copied().unwrap_or(0))?;
    let summary = run_experiment(&spec)?;
    let text = match args.format {
        Format::Json => to_json(&summary)?,
        Format::Csv => csv_string(&[SweepRow {
            n: spec.n,
            success_rate: summary.success_rate,
            trials: spec.trials,
            seed: spec.base_seed,
        }])?,
    };
    emit(args.common.out.as_ref(), &text)
}

fn run_sweep(args: ExperimentArgs) -> Result<(), Error> {
    if args.n.is_empty() {
        return Err(Error::IncompleteInputs("--n (comma-separated sample sizes)"));
    }
    let template = experiment_spec(&args, args.n[0])?;
    let rows = sweep(&template, &args.n)?;
    emit(args.common.out.as_ref(), &csv_string(&rows)?)
}

#[derive(Serialize)]
struct CalcOutput {
    #[serde(flatten)]
    report: dpexp::analysis::SampleSizeReport,
    safety_factor: Option<f64>,
    n_scaled: Option<u64>,
}

fn calc(args: CalcArgs) -> Result<(), Error> {
    let bounds = match (args.lambda_min, args.lambda_max) {
        (Some(lo), Some(hi)) => Some(RateBounds::new(lo, hi)?),
        _ => None,
    };
    let inputs = CalcInputs {
        alpha: args.alpha,
        beta: args.beta,
        epsilon: args.epsilon,
        delta: args.delta,
        lambda: args.lambda,
        bounds,
        clip_r: args.clip_r,
        tau: args.tau,
    };
    let report = required_n(args.theorem, &inputs)?;
    let n_scaled = args.safety_factor.map(|f| (f * report.value).ceil().max(1.0) as u64);
    let out = CalcOutput {
        report,
        safety_factor: args.safety_factor,
        n_scaled,
    };
    emit(args.out.as_ref(), &to_json(&out)?)
}

#[derive(Serialize)]
struct LowerOutput {
    n_lower: u64,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    lambda_min: f64,
    lambda_max: f64,
}

fn lowerbound(args: LowerArgs) -> Result<(), Error> {
    let bounds = RateBounds::new(args.lambda_min, args.lambda_max)?;
    let out = LowerOutput {
        n_lower: lower_bound_n(args.alpha, args.beta, args.epsilon, &bounds)?,
        alpha: args.alpha,
        beta: args.beta,
        epsilon: args.epsilon,
        lambda_min: args.lambda_min,
        lambda_max: args.lambda_max,
    };
    emit(args.out.as_ref(), &to_json(&out)?)
}

#[derive(Serialize)]
struct PackingOutput {
    #[serde(flatten)]
    family: dpexp::analysis::PackingFamily,
    size: usize,
    min_adjacent_tv: f64,
}

fn packing(args: PackingArgs) -> Result<(), Error> {
    let family = build_packing(&RateBounds::new(args.lambda_min, args.lambda_max)?, args.alpha)?;
    let out = PackingOutput {
        size: family.len(),
        min_adjacent_tv: family.min_adjacent_tv()?,
        family,
    };
    emit(args.out.as_ref(), &to_json(&out)?)
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Gen(a) => gen(a),
        Command::Estimate(a) => estimate(a),
        Command::Experiment(a) => experiment(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Calc(a) => calc(a),
        Command::Lowerbound(a) => lowerbound(a),
        Command::Packing(a) => packing(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.name());
            ExitCode::FAILURE
        }
    }
}
