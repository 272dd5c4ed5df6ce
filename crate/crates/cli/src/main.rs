use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sensikit::mechanisms::{
    bernstein_release, exponential_release, gaussian_release, laplace_release, DegeneratePolicy,
};
use sensikit::planner::{plan_min_gamma, plan_min_k, plan_min_m, validate_plan, PlanObjective, SamplingPlan};
use sensikit::sampler::{estimate_delta, sample_sensitivity, substream, verify_rdp_coverage, SensitivitySample};
use sensikit::{Error, Result};

use sensikit_cli::dataset::read_records;
use sensikit_cli::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use sensikit_cli::plan_io::{read_plan, write_plan};
use sensikit_cli::specs::{dist_record_width, parse_dist, parse_target};

#[derive(Parser)]
#[command(name = "sensikit", about = "Sensitivity sampling for random differential privacy", version)]
struct Cli {
    /// Size of the worker thread pool (default: number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a sampling plan (rho, m, k, gamma) for a chosen objective.
    Plan(PlanArgs),
    /// Run the sensitivity sampler and write a sample file.
    Sample(SampleArgs),
    /// Release a private response calibrated to a sampled sensitivity.
    Release(ReleaseArgs),
    /// Check empirical coverage of a sensitivity estimate on fresh draws.
    Verify(VerifyArgs),
    /// Run a named experiment and write its CSV table.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Plan objective: min-m, min-k, min-gamma or manual.
    #[arg(long)]
    objective: String,
    /// Privacy confidence gamma in (0, 1).
    #[arg(long)]
    gamma: Option<f64>,
    /// Sample size m (required by min-k, min-gamma and manual).
    #[arg(long)]
    m: Option<u64>,
    /// Order-statistic index k (manual only).
    #[arg(long)]
    k: Option<u64>,
    /// CDF confidence rho (manual only).
    #[arg(long)]
    rho: Option<f64>,
    /// Also write the plan to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Target spec: mean, svm[:C], kde[:bandwidth,k] or extern:<path>.
    #[arg(long)]
    target: String,
    /// Record distribution: exp:<lambda>, uniform:<d>, twogauss:<d>, mixture.
    #[arg(long)]
    dist: String,
    /// Database size n.
    #[arg(long)]
    n: usize,
    /// Number of sensitivity measurements m.
    #[arg(long)]
    m: u64,
    /// Master seed (falls back to SENSIKIT_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the sample file here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReleaseArgs {
    /// Mechanism: laplace, gaussian, exponential or bernstein.
    #[arg(long)]
    mechanism: String,
    /// Privacy parameter epsilon.
    #[arg(long)]
    epsilon: f64,
    /// DP slack delta (gaussian mechanism only).
    #[arg(long)]
    delta: Option<f64>,
    /// Bernstein iteration order (bernstein mechanism only).
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Plan file written by the plan subcommand.
    #[arg(long)]
    plan_file: PathBuf,
    /// Sample file written by the sample subcommand.
    #[arg(long)]
    sample_file: PathBuf,
    /// CSV database to respond to.
    #[arg(long)]
    data: PathBuf,
    /// Target spec, matching the one the sample was drawn for.
    #[arg(long)]
    target: String,
    /// Release the unnoised value when the sensitivity estimate is zero.
    #[arg(long)]
    allow_degenerate: bool,
    /// Master seed (falls back to SENSIKIT_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the release here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Target spec.
    #[arg(long)]
    target: String,
    /// Record distribution spec.
    #[arg(long)]
    dist: String,
    /// Database size n.
    #[arg(long)]
    n: usize,
    /// Number of fresh neighbouring pairs to test.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Sensitivity estimate to check, given directly...
    #[arg(long)]
    delta_hat: Option<f64>,
    /// ...or as the k-th order statistic of a sample file.
    #[arg(long)]
    sample_file: Option<PathBuf>,
    #[arg(long)]
    k: Option<u64>,
    /// Master seed (falls back to SENSIKIT_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment name: analytic_vs_sampled, bounded_mean, svm_sensitivity,
    /// svm_utility or kde_utility.
    #[arg(long)]
    name: String,
    /// Master seed (falls back to SENSIKIT_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the experiment's default repeat count.
    #[arg(long)]
    repeats: Option<u64>,
    /// Use the full-size budgets instead of desk-scale defaults.
    #[arg(long)]
    paper_scale: bool,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_)
        | Error::Parse(_)
        | Error::DimensionMismatch { .. }
        | Error::IndexOutOfRange { .. } => 2,
        Error::InfeasiblePlan { .. } => 3,
        Error::DegenerateSensitivity => 4,
        Error::Io(_) => 5,
        Error::NumericFailure(_) => 6,
        Error::Eval { .. } | Error::NonFinite { .. } => 7,
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("SENSIKIT_SEED") {
        Ok(value) => value
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("SENSIKIT_SEED: {e}"))),
        Err(_) => Err(Error::Domain(
            "no seed: pass --seed or set SENSIKIT_SEED".into(),
        )),
    }
}

/// Writes `text` to the file at `out`, or to standard output.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = File::create(path)?;
            file.write_all(text.as_bytes())?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Domain(format!("{what} is required here")))
}

fn cmd_plan(args: PlanArgs) -> Result<()> {
    let objective = PlanObjective::from_id(&args.objective)?;
    let plan = match objective {
        PlanObjective::MinM => plan_min_m(require(args.gamma, "--gamma")?)?,
        PlanObjective::MinK => {
            plan_min_k(require(args.m, "--m")?, require(args.gamma, "--gamma")?)?
        }
        PlanObjective::MinGamma => plan_min_gamma(require(args.m, "--m")?)?,
        PlanObjective::Manual => {
            let plan = SamplingPlan {
                rho: require(args.rho, "--rho")?,
                m: require(args.m, "--m")?,
                k: require(args.k, "--k")?,
                gamma: require(args.gamma, "--gamma")?,
                objective: PlanObjective::Manual,
            };
            let verdict = validate_plan(&plan);
            if !verdict.is_valid() {
                return Err(Error::Domain(format!("manual plan is invalid: {verdict:?}")));
            }
            plan
        }
    };
    let mut text = Vec::new();
    write_plan(&mut text, &plan)?;
    let text = String::from_utf8(text).expect("plan text is UTF-8");
    if args.out.is_some() {
        emit(&args.out, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let width = dist_record_width(&args.dist)?;
    let dist = parse_dist(&args.dist)?;
    let target = parse_target(&args.target, args.n, width)?;
    let sample = sample_sensitivity(target.as_ref(), dist.as_ref(), args.m, seed)?;
    let mut text = Vec::new();
    sample.write_to(&mut text)?;
    emit(&args.out, &String::from_utf8(text).expect("sample text is UTF-8"))
}

fn cmd_release(args: ReleaseArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let plan = read_plan(BufReader::new(File::open(&args.plan_file)?))?;
    let sample = SensitivitySample::read_from(BufReader::new(File::open(&args.sample_file)?))?;
    let delta_hat = estimate_delta(&sample, plan.k)?;
    let records = read_records(BufReader::new(File::open(&args.data)?))?;
    let target = parse_target(&args.target, records.len(), records[0].len())?;
    let value = target.eval(&records)?;
    let policy = if args.allow_degenerate {
        DegeneratePolicy::ReleaseUnnoised
    } else {
        DegeneratePolicy::Reject
    };
    let mut rng = substream(seed, u64::MAX);
    let mut release = match args.mechanism.as_str() {
        "laplace" => laplace_release(&value, delta_hat, args.epsilon, &mut rng, policy)?,
        "gaussian" => gaussian_release(
            &value,
            delta_hat,
            args.epsilon,
            require(args.delta, "--delta")?,
            &mut rng,
            policy,
        )?,
        "exponential" => exponential_release(&value, delta_hat, args.epsilon, &mut rng, policy)?,
        "bernstein" => {
            // One-dimensional lattice release; the value vector holds the
            // (k+1) lattice values.
            let k = value.len().checked_sub(1).filter(|k| *k >= 1).ok_or_else(|| {
                Error::Domain("bernstein release needs at least two lattice values".into())
            })?;
            bernstein_release(&value, k, 1, args.order, delta_hat, args.epsilon, &mut rng, policy)?
        }
        other => return Err(Error::Parse(format!("unknown mechanism {other:?}"))),
    };
    release.gamma = Some(plan.gamma);
    let mut text = Vec::new();
    release.write_to(&mut text)?;
    emit(&args.out, &String::from_utf8(text).expect("release text is UTF-8"))
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let delta_hat = match (args.delta_hat, &args.sample_file) {
        (Some(value), None) => value,
        (None, Some(path)) => {
            let sample = SensitivitySample::read_from(BufReader::new(File::open(path)?))?;
            estimate_delta(&sample, require(args.k, "--k")?)?
        }
        _ => {
            return Err(Error::Domain(
                "pass exactly one of --delta-hat or --sample-file with --k".into(),
            ))
        }
    };
    let width = dist_record_width(&args.dist)?;
    let dist = parse_dist(&args.dist)?;
    let target = parse_target(&args.target, args.n, width)?;
    let coverage =
        verify_rdp_coverage(target.as_ref(), dist.as_ref(), delta_hat, args.trials, seed)?;
    println!("delta_hat={delta_hat}");
    println!("trials={}", args.trials);
    println!("coverage={coverage}");
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let kind = ExperimentKind::from_id(&args.name)?;
    let mut config = ExperimentConfig::new(kind, seed, args.paper_scale);
    if let Some(repeats) = args.repeats {
        config.repeats = repeats;
    }
    let csv = run_experiment(&config)?;
    emit(&args.out, &csv)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Release(args) => cmd_release(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::InfeasiblePlan { min_gamma, .. } = &err {
                eprintln!("hint: the smallest feasible gamma at this m is {min_gamma}");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
