use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use obcs::complexity::bounds_report;
use obcs::experiment::{run_experiment, write_outputs, ExperimentConfig};
use obcs::lp::PivotRule;
use obcs::measurement::{MeasurementSet, NoiseChannel, SamplingDistribution};
use obcs::metrics::{gen_error_monte_carlo, noisy_risk, recovery_report, rho_monte_carlo, ErrorReport, DEFAULT_TRIALS};
use obcs::rng::Seed;
use obcs::solvers::{Method, RecoveryConfig, RecoverySolution, SolveStatus};
use obcs::sparse::SparseVector;
use obcs::vc::{
    build_witness, is_shattered_with, vc_bounds, vc_bounds_affine, witness_shattered, ShatterInstance,
    ShatterOptions,
};

/// One-bit compressed sensing: recovery, error metrics, VC tools and sample-complexity bounds.
#[derive(Parser)]
#[command(name = "obcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a sparse vector from a measurement CSV.
    Solve(SolveArgs),
    /// Compare an estimate with the truth.
    Evaluate(EvaluateArgs),
    /// VC-dimension bounds, witness sets and shattering checks.
    #[command(subcommand)]
    Vc(VcCommand),
    /// Sample-complexity report for an (n, k, ε, δ) query.
    Bounds(BoundsArgs),
    /// Recovery sweeps over the number of measurements.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Draw a sparse truth and its sign measurements.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Measurement CSV with columns a_1..a_n[,b],y.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "l1svm")]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long)]
    truncate_k: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Use Bland's rule for every pivot instead of Dantzig pricing.
    #[arg(long)]
    bland: bool,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveOutput {
    method: Method,
    estimate: SparseVector,
    offset_coefficient: Option<f64>,
    objective: Option<f64>,
    status: SolveStatus,
    slack_total: f64,
    iterations: usize,
    direction_only: bool,
}

impl SolveOutput {
    fn new(method: Method, sol: RecoverySolution) -> Self {
        SolveOutput {
            method,
            objective: sol.converged.then_some(sol.objective_value),
            estimate: sol.estimate,
            offset_coefficient: sol.offset_coefficient,
            status: sol.status,
            slack_total: sol.slack_total,
            iterations: sol.iterations_used,
            direction_only: sol.direction_only,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// JSON vector, or the output of `solve`.
    #[arg(long)]
    estimate: PathBuf,
    /// JSON vector.
    #[arg(long)]
    truth: PathBuf,
    /// gaussian, rademacher, sphere, or a JSON distribution file. Without
    /// it the angular error uses the closed form for radially invariant rows.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also estimate the risk against labels flipped at this rate.
    #[arg(long)]
    flip_probability: Option<f64>,
    /// Truncation level for support hits; defaults to the truth's support size.
    #[arg(long)]
    k: Option<usize>,
    /// Append a row to this CSV, writing the header if the file is new.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VcCommand {
    /// Lower and upper VC-dimension bounds.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        affine: bool,
    },
    /// Print the witness matrix as integer CSV; its columns are the points.
    Witness {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Check every dichotomy exactly and report on stderr.
        #[arg(long)]
        verify: bool,
    },
    /// Decide whether k-sparse halfspaces shatter a point set.
    Shatter {
        /// CSV without header, one point per row.
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u128,
    },
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    affine: bool,
    /// Include the label-noise and uniform-convergence bounds.
    #[arg(long)]
    noisy: bool,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run a sweep and write records.csv, summary.csv, timings.csv and meta.json.
    Run {
        /// JSON experiment config.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// desk or full-scale.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "gaussian")]
    dist: String,
    /// Standard deviation of the offsets b_i; 0 gives linear measurements.
    #[arg(long, default_value_t = 0.0)]
    offset_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    flip_probability: f64,
    /// Measurement CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// JSON file for the truth vector.
    #[arg(long)]
    truth: PathBuf,
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_vector(path: &Path) -> Result<SparseVector> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inner = match value.get("estimate") {
        Some(e) => e.clone(),
        None => value,
    };
    serde_json::from_value(inner).with_context(|| format!("{} is not a vector", path.display()))
}

fn distribution(spec: &str) -> Result<SamplingDistribution> {
    Ok(match spec {
        "gaussian" => SamplingDistribution::gaussian(),
        "rademacher" => SamplingDistribution::rademacher(),
        "sphere" => SamplingDistribution::sphere(),
        path => {
            let text = fs::read_to_string(path).with_context(|| format!("reading distribution {path}"))?;
            serde_json::from_str(&text).with_context(|| format!("parsing distribution {path}"))?
        }
    })
}

fn solve(args: SolveArgs) -> Result<()> {
    let ms = MeasurementSet::load_csv(&args.input).with_context(|| format!("loading {}", args.input.display()))?;
    let mut cfg = RecoveryConfig::default().with_lambda(args.lambda).with_tau(args.tau);
    cfg.tolerance = args.tol;
    cfg.max_iterations = args.max_iter;
    cfg.truncation_k = args.truncate_k;
    if args.bland {
        cfg.pivot_rule = PivotRule::Bland;
    }
    let sol = args.method.recover(&ms, &cfg)?;
    write_json(&SolveOutput::new(args.method, sol), args.output.as_deref())
}

#[derive(Serialize)]
struct EvaluateOutput {
    #[serde(flatten)]
    report: ErrorReport,
    gen_error_source: &'static str,
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let xhat = read_vector(&args.estimate)?;
    let x = read_vector(&args.truth)?;
    let k = args.k.unwrap_or_else(|| x.nnz().max(1));
    let mut report = recovery_report(&xhat, &x, k)?;
    let mut source = "closed_form";
    let dist = args.dist.as_deref().map(distribution).transpose()?;
    let seed = Seed(args.seed);
    if let Some(d) = &dist {
        if report.direction_defined {
            report.gen_error = Some(gen_error_monte_carlo(&xhat, &x, d, args.trials, seed)?);
            report.rho = Some(rho_monte_carlo(&xhat, &x, d, args.trials, seed)?);
            source = "monte_carlo";
        }
    }
    if let Some(alpha) = args.flip_probability {
        let d = dist.unwrap_or_else(SamplingDistribution::gaussian);
        report.noisy_risk = Some(noisy_risk(&xhat, &x, &d, NoiseChannel::new(alpha)?, args.trials, seed)?);
    }
    if let Some(path) = &args.csv {
        append_csv_row(path, &args, &report)?;
    }
    write_json(&EvaluateOutput { report, gen_error_source: source }, None)
}

fn append_csv_row(path: &Path, args: &EvaluateArgs, r: &ErrorReport) -> Result<()> {
    let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "estimate,truth,gen_error,rho,mse,support_hits,noisy_risk")?;
    }
    let opt = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    writeln!(
        file,
        "{},{},{},{},{:?},{},{}",
        args.estimate.display(),
        args.truth.display(),
        opt(r.gen_error),
        opt(r.rho),
        r.mse,
        r.support_hits,
        opt(r.noisy_risk)
    )?;
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|f| f.trim().parse::<f64>().with_context(|| format!("line {}: bad number `{f}`", i + 1)))
                .collect()
        })
        .collect()
}

#[derive(Serialize)]
struct ShatterOutput {
    shattered: bool,
    points: usize,
    k: usize,
    n: usize,
}

fn vc(cmd: VcCommand) -> Result<ExitCode> {
    match cmd {
        VcCommand::Bounds { n, k, affine } => {
            let b = if affine { vc_bounds_affine(n, k)? } else { vc_bounds(n, k)? };
            write_json(&b, None)?;
        }
        VcCommand::Witness { n, k, verify } => {
            let w = build_witness(n, k)?;
            w.write_csv(io::stdout().lock())?;
            if verify {
                let ok = witness_shattered(&w)?;
                let l = w.num_points();
                eprintln!(
                    "{}: {} points, {} dichotomies",
                    if ok { "shattered" } else { "NOT shattered" },
                    l,
                    1u64 << l
                );
                if !ok {
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        VcCommand::Shatter { points, k, budget } => {
            let inst = ShatterInstance::new(read_points(&points)?, k)?;
            let opts = ShatterOptions { lp_budget: budget, ..Default::default() };
            let shattered = is_shattered_with(&inst, &opts)?;
            write_json(&ShatterOutput { shattered, points: inst.len(), k, n: inst.ambient_dim() }, None)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment(cmd: ExperimentCommand) -> Result<()> {
    let ExperimentCommand::Run { config, preset, out, workers } = cmd;
    let mut cfg = match (config, preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(name)) => ExperimentConfig::preset(&name)?,
        (None, None) => bail!("pass --config <json> or --preset <name>"),
    };
    if let Some(w) = workers {
        cfg.workers = w;
    }
    let records = run_experiment(&cfg)?;
    let summary = write_outputs(&cfg, &records, &out)?;
    eprintln!("{} records, {} summary rows written to {}", records.len(), summary.len(), out.display());
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let seed = Seed(args.seed);
    let x = obcs::experiment::generate_truth(args.n, args.k, seed.child(0))?;
    let dist = distribution(&args.dist)?.with_offsets(args.offset_scale);
    let ms = MeasurementSet::generate(&x, &dist, args.m, seed.child(1), NoiseChannel::new(args.flip_probability)?)?;
    ms.save_csv(&args.out)?;
    fs::write(&args.truth, serde_json::to_string(&x)? + "\n")?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(a) => solve(a)?,
        Command::Evaluate(a) => evaluate(a)?,
        Command::Vc(c) => return vc(c),
        Command::Bounds(a) => write_json(&bounds_report(a.n, a.k, a.eps, a.delta, a.affine, a.noisy)?, None)?,
        Command::Experiment(c) => experiment(c)?,
        Command::Generate(a) => generate(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
