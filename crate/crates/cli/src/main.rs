use std::path::PathBuf;
use std::process::ExitCode;

use berr_cli::bench::SUITESPARSE_ENV;
use berr_cli::{
    cmd_bench, cmd_solve, cmd_synth, BenchOptions, CliError, Disguise, ProblemSpec, SpecLayer,
    Suite,
};
use clap::{Args, Parser, Subcommand};

/// Krylov solvers measured, compared and stopped in relative backward error.
#[derive(Parser)]
#[command(name = "berr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on one problem.
    Solve(SolveArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
    /// Write a synthetic instance and its right-hand side as Matrix Market files.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Plain-text key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spec to start from: a summary JSON written by an earlier run, or a bare spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[command(flatten)]
    flags: SpecLayer,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Output directory for histories, plots and manifest.json.
    #[arg(long, short, default_value = "bench-out")]
    out: PathBuf,
    /// Directory of SuiteSparse .mtx files [default: $BERR_SUITESPARSE_DIR].
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Write one SVG plot per problem.
    #[arg(long)]
    plots: bool,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Synthetic problem, e.g. ill-conditioned:n=3,kappa=100
    problem: ProblemSpec,
    /// Matrix output path.
    #[arg(long, short)]
    out: PathBuf,
    /// Right-hand-side output path [default: <out stem>_b.mtx].
    #[arg(long)]
    rhs_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    disguise: Disguise,
    /// Seed of the disguise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let mut layer = args.flags;
    if let Some(path) = &args.config {
        layer = layer.over(SpecLayer::read_config(path)?);
    }
    if let Some(path) = &args.spec {
        layer = layer.over(SpecLayer::from_spec(&berr_cli::spec::read_spec_json(path)?));
    }
    let spec = layer.build()?;
    let summary = cmd_solve(&spec)?;
    log::info!(
        "{}: final berr {:e}",
        summary.report.termination,
        summary.report.final_berr.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), ExitCode> {
    let opts = BenchOptions {
        suite: args.suite,
        out_dir: args.out,
        suitesparse_dir: args
            .dir
            .or_else(|| std::env::var_os(SUITESPARSE_ENV).map(PathBuf::from)),
        plots: args.plots,
        jobs: args.jobs,
    };
    let manifest = cmd_bench(&opts).map_err(|e| report(&e))?;
    let failed = manifest.failures();
    if failed > 0 {
        eprintln!(
            "berr: {failed} of {} runs failed; see manifest.json",
            manifest.runs.len()
        );
        return Err(ExitCode::from(3));
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    cmd_synth(
        &args.problem,
        args.disguise,
        args.seed,
        &args.out,
        args.rhs_out.as_deref(),
    )
    .map(|_| ())
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("berr: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(a) => solve(a).map_err(|e| report(&e)),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a).map_err(|e| report(&e)),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
