use clap::{Parser, Subcommand};
use layerlab::cli::{self, ExperimentConfig, RunSummary};
use layerlab::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "layerlab",
    version,
    about = "Transition layers of the heterogeneous Allen-Cahn equation"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Output directory for run artifacts.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Accepted for compatibility; every computation is deterministic.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Residual-order study of the layer ansatz.
    Approx(ConfigArg),
    /// Newton and fixed-point solves from the ansatz.
    Solve(ConfigArg),
    /// Near-zero spectrum and the small-eigenvalue law.
    Spectrum(ConfigArg),
    /// ε-scan of crossings and gaps.
    Scan(ConfigArg),
    /// Weyl-law fit of the interface spectrum.
    Weyl(ConfigArg),
    /// Summarize earlier runs.
    Report {
        /// Run ids under the output directory.
        ids: Vec<String>,
    },
}

#[derive(clap::Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

type Runner = fn(&ExperimentConfig, &Path) -> layerlab::Result<RunSummary>;

fn run_command(runner: Runner, config: &Path, out: &Path) -> Result<ExitCode, Error> {
    let cfg = ExperimentConfig::load(config)?;
    let summary = runner(&cfg, out)?;
    println!("{} {}", summary.command, out.join(&summary.id).display());
    for c in &summary.checks {
        println!("  {}", c.line());
    }
    Ok(match &summary.error {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        None => ExitCode::SUCCESS,
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &args.command {
        Command::Approx(c) => run_command(cli::cmd_approx, &c.config, &args.out),
        Command::Solve(c) => run_command(cli::cmd_solve, &c.config, &args.out),
        Command::Spectrum(c) => run_command(cli::cmd_spectrum, &c.config, &args.out),
        Command::Scan(c) => run_command(cli::cmd_scan, &c.config, &args.out),
        Command::Weyl(c) => run_command(cli::cmd_weyl, &c.config, &args.out),
        Command::Report { ids } => cli::cmd_report(&args.out, ids).map(|r| {
            print!("{}", r.render());
            ExitCode::SUCCESS
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(if e.is_config() { 2 } else { 3 })
    })
}
