//! Command-line front end: instance generation, single solves, and the
//! CG-versus-GG convergence benchmark.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use colgen::driver::{self, DriverError, Termination};
use colgen::instance::InstanceError;
use colgen::{Algorithm, CvrpInstance, SolveParams, SolveResult};

#[derive(Parser)]
#[command(
    name = "colgen",
    version,
    about = "Column generation and graph generation for CVRP relaxations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file
    Gen(GenArgs),
    /// Solve one instance with one algorithm
    Solve(SolveArgs),
    /// Compare both algorithms over a batch of generated instances
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Seed of the instance generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of customers
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    customers: u32,
    /// Fleet size
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    vehicles: u32,
    /// Vehicle capacity (demands are all one)
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u32).range(1..))]
    capacity: u32,
    /// Coordinates are drawn uniformly from [0, grid] squared
    #[arg(long, default_value_t = 100)]
    grid: u32,
    /// Output path
    #[arg(short, long, default_value = "instance.json")]
    output: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AlgoFlag {
    /// Plain column generation
    Cg,
    /// Graph generation (column generation plus route families)
    Gg,
}

impl From<AlgoFlag> for Algorithm {
    fn from(flag: AlgoFlag) -> Algorithm {
        match flag {
            AlgoFlag::Cg => Algorithm::Cg,
            AlgoFlag::Gg => Algorithm::Gg,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file to solve
    instance: PathBuf,
    /// Algorithm to run
    #[arg(long, value_enum)]
    algo: AlgoFlag,
    /// Seed of the rng behind family orderings
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reduced-cost convergence tolerance
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Iteration cap
    #[arg(long, default_value_t = 100_000)]
    max_iters: u64,
    /// Trace CSV path (default: next to the instance)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Solve every master from scratch instead of warm-starting
    #[arg(long)]
    no_warm_start: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Explicit instance seeds, comma separated (overrides --count/--base-seed)
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["count", "base_seed"])]
    seeds: Option<Vec<u64>>,
    /// Number of instances
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u32).range(1..))]
    count: u32,
    /// First instance seed; instance i uses base_seed + i
    #[arg(long, default_value_t = 100)]
    base_seed: u64,
    /// Number of customers per instance
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    customers: u32,
    /// Fleet size per instance
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    vehicles: u32,
    /// Vehicle capacity per instance
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u32).range(1..))]
    capacity: u32,
    /// Coordinate range per instance
    #[arg(long, default_value_t = 100)]
    grid: u32,
    /// Directory for the summary and trace files
    #[arg(long, default_value = "bench_out")]
    out_dir: PathBuf,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed of the rng behind family orderings
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reduced-cost convergence tolerance
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Iteration cap per run
    #[arg(long, default_value_t = 100_000)]
    max_iters: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// File and instance problems exit 2; a cross-algorithm objective mismatch
/// in a benchmark exits 4; anything else is a generic failure.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<std::io::Error>().is_some()
        || err.downcast_ref::<InstanceError>().is_some()
    {
        return 2;
    }
    if matches!(
        err.downcast_ref::<DriverError>(),
        Some(DriverError::ObjectiveMismatch { .. })
    ) {
        return 4;
    }
    1
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<u8> {
    let instance = CvrpInstance::generate(
        args.seed,
        args.customers as usize,
        args.vehicles,
        args.capacity,
        args.grid,
    )?;
    instance.save(&args.output)?;
    println!("{}", args.output.display());
    Ok(0)
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<u8> {
    let instance = CvrpInstance::load(&args.instance)?;
    let params = SolveParams {
        algorithm: args.algo.into(),
        reduced_cost_tolerance: args.tolerance,
        max_iterations: args.max_iters,
        ordering_seed: args.seed,
        warm_start: !args.no_warm_start,
    };
    let result: SolveResult = driver::solve(&instance, &params)?;

    let algo_name = match params.algorithm {
        Algorithm::Cg => "cg",
        Algorithm::Gg => "gg",
    };
    let trace_path = args
        .trace
        .unwrap_or_else(|| default_trace_path(&args.instance, algo_name));
    std::fs::write(&trace_path, driver::trace_csv(&result))
        .with_context(|| format!("writing trace to {}", trace_path.display()))?;

    let verdict = match result.termination {
        Termination::Converged => "converged",
        Termination::IterationCap => "hit the iteration cap",
    };
    println!(
        "{algo_name} {verdict} after {} iterations",
        result.iteration_count()
    );
    println!("objective {:.9}", result.objective);
    println!(
        "rmp {:.3}s pricing {:.3}s",
        result.total_rmp_seconds(),
        result.total_pricing_seconds()
    );
    println!("trace written to {}", trace_path.display());
    Ok(match result.termination {
        Termination::Converged => 0,
        Termination::IterationCap => 3,
    })
}

fn default_trace_path(instance: &Path, algo: &str) -> PathBuf {
    let stem = instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string());
    instance.with_file_name(format!("{stem}_{algo}_trace.csv"))
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<u8> {
    let seeds: Vec<u64> = match &args.seeds {
        Some(seeds) => seeds.clone(),
        None => (0..u64::from(args.count))
            .map(|i| args.base_seed + i)
            .collect(),
    };
    let mut instances = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let instance = CvrpInstance::generate(
            seed,
            args.customers as usize,
            args.vehicles,
            args.capacity,
            args.grid,
        )?;
        instances.push((seed, instance));
    }
    let params = SolveParams {
        algorithm: Algorithm::Cg,
        reduced_cost_tolerance: args.tolerance,
        max_iterations: args.max_iters,
        ordering_seed: args.seed,
        warm_start: true,
    };
    let jobs = args.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    println!(
        "benchmarking {} instances (n={} vehicles={} capacity={}) on {jobs} workers",
        seeds.len(),
        args.customers,
        args.vehicles,
        args.capacity
    );
    let report = driver::run_benchmark::<f64>(&instances, &params, jobs)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let summary_path = args.out_dir.join("summary.csv");
    std::fs::write(&summary_path, driver::summary_csv(&report))
        .with_context(|| format!("writing {}", summary_path.display()))?;
    for (row, (cg, gg)) in report.rows.iter().zip(&report.results) {
        for (algo, result) in [("cg", cg), ("gg", gg)] {
            let path = args.out_dir.join(format!("seed_{}_{algo}_trace.csv", row.seed));
            std::fs::write(&path, driver::trace_csv(result))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }

    println!(
        "{:>8} {:>14} {:>9} {:>9} {:>7} {:>9} {:>9}",
        "seed", "objective", "cg_iters", "gg_iters", "ratio", "cg_s", "gg_s"
    );
    for row in &report.rows {
        println!(
            "{:>8} {:>14.3} {:>9} {:>9} {:>7.2} {:>9.3} {:>9.3}",
            row.seed,
            row.objective,
            row.cg_iterations,
            row.gg_iterations,
            row.iteration_ratio(),
            row.cg_seconds,
            row.gg_seconds
        );
    }
    println!(
        "mean iteration ratio {:.3}, median {:.3}; graph generation needed fewer \
         iterations on {}/{} instances",
        report.mean_iteration_ratio(),
        report.median_iteration_ratio(),
        report.fewer_iteration_count(),
        report.rows.len()
    );
    println!("summary written to {}", summary_path.display());
    Ok(0)
}
