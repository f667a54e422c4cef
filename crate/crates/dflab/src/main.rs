use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dflab::config::DEFAULT_CONFIG;
use dflab::{run, Format, HarnessError, RunConfig, Task};

#[derive(Debug, Parser)]
#[command(name = "dflab", version, about = "Dirichlet–Ferguson diffusion simulator and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one task, or `all`, and write report.json plus artifacts.
    Run(RunArgs),
    /// Print the built-in default configuration.
    DefaultConfig,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(value_enum)]
    task: Task,
    /// Config file (same as --config).
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    config_file: Option<PathBuf>,
    #[arg(long, env = "DFLAB_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, env = "DFLAB_SEED")]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, env = "DFLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, env = "DFLAB_WORKERS")]
    workers: Option<usize>,
    #[arg(long, value_enum, env = "DFLAB_FORMAT", default_value = "csv")]
    format: Format,
}

fn execute(args: RunArgs) -> Result<bool, HarnessError> {
    let mut cfg = match args.config_file.or(args.config) {
        Some(path) => RunConfig::from_file(&path)?,
        None => RunConfig::from_json(DEFAULT_CONFIG)?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(HarnessError::schema("--workers", "must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let report = pool.build()?.install(|| run(args.task, &cfg, args.format))?;
    for c in &report.checks {
        println!(
            "{:<13} {:<60} {:>14.6e} ± {:<12.3e} target {:>12.6e} tol {:.3e}",
            format!("{:?}", c.status).to_uppercase(),
            c.name,
            c.estimate,
            c.stderr,
            c.target,
            c.tolerance
        );
    }
    for e in &report.errors {
        println!("ERROR         {}: {}", e.task, e.message);
    }
    println!("{} -> {}", if report.passed { "PASS" } else { "FAIL" }, cfg.out_dir.display());
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::DefaultConfig => {
            print!("{DEFAULT_CONFIG}");
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
