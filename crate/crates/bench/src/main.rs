use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnsplit_bench::compare::thread_budget;
use qnsplit_bench::config::Algorithm;
use qnsplit_bench::{compare, execute, BenchError, RunConfig};

#[derive(Parser)]
#[command(name = "bench", about = "Run and compare linesearch DRS/ADMM solvers", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configured problem and write trace.csv and summary.json.
    Run(RunArgs),
    /// Run several engines over consecutive seeds and tabulate oracle counts.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    /// Direction engine, e.g. `lbfgs(5)`, `broyden(0.2)`, `anderson`.
    #[arg(long)]
    engine: Option<String>,
    /// DRS stepsize; replaces the configured step policy.
    #[arg(long, conflicts_with = "beta")]
    gamma: Option<f64>,
    /// ADMM penalty; replaces the configured step policy.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Output directory; defaults to `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// One or more configs describing the same problem.
    #[arg(long, required = true, num_args = 1..)]
    config: Vec<PathBuf>,
    /// Comma-separated engines, each run with the linesearch variant.
    #[arg(long, value_delimiter = ',')]
    engines: Option<Vec<String>>,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AlgorithmArg {
    Drs,
    DrsLs,
    Admm,
    AdmmLs,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Drs => Algorithm::Drs,
            AlgorithmArg::DrsLs => Algorithm::DrsLs,
            AlgorithmArg::Admm => Algorithm::Admm,
            AlgorithmArg::AdmmLs => Algorithm::AdmmLs,
        }
    }
}

fn run(args: RunArgs) -> Result<(), BenchError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(a) = args.algorithm {
        cfg.algorithm = a.into();
    }
    if let Some(e) = args.engine {
        cfg.engine = e;
    }
    if let Some(step) = args.gamma.or(args.beta) {
        if args.beta.is_some() != cfg.algorithm.is_admm() {
            let flag = if args.beta.is_some() { "--beta" } else { "--gamma" };
            return Err(BenchError::Validation(format!("{flag} does not apply to {}", cfg.algorithm.name())));
        }
        cfg.override_step(step);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(eps) = args.epsilon {
        cfg.epsilon = eps;
    }
    if let Some(n) = args.max_iters {
        cfg.max_iters = n;
    }
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| BenchError::Validation("no output directory: pass --out or set `out`".into()))?;
    let outcome = execute(&cfg)?;
    outcome.write(&out)?;
    let s = &outcome.summary;
    println!(
        "{} {}/{} seed {}: {:?} after {} iterations, residual {:.3e}, {} prox1 calls, certificate {}",
        s.family,
        s.algorithm,
        s.engine,
        s.seed,
        s.status,
        s.iterations,
        s.final_residual,
        s.totals.prox1,
        match s.certificate_holds {
            Some(true) => "holds",
            Some(false) => "FAILS",
            None => "n/a",
        }
    );
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<(), BenchError> {
    let configs = args
        .config
        .iter()
        .map(|p| RunConfig::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let out = args
        .out
        .or_else(|| configs.first().and_then(|c| c.out.clone()))
        .ok_or_else(|| BenchError::Validation("no output directory: pass --out or set `out`".into()))?;
    let report = compare(&configs, args.engines.as_deref(), args.seeds, thread_budget()?)?;
    report.write(&out)?;
    print!("{}", report.table());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => run_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
