//! `sbo`: sample the limit process, tabulate closed forms and run the
//! comparison experiments. Every command writes one CSV or JSON file and
//! prints its path.

mod analytic;
mod compare;
mod output;
mod sample_limit;

use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sbo_core::diffusion::{McOpts, SimOpts};

pub type CliResult<T> = Result<T, Box<dyn Error + Send + Sync>>;

#[derive(Parser, Debug)]
#[command(name = "sbo", version, about = "Simulation and analytics for the high-temperature hard-edge point process")]
struct Cli {
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for outputs written without --output.
    #[arg(long, global = true, env = "SBO_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample points and count profiles of the limit process.
    SampleLimit(sample_limit::SampleLimitArgs),
    /// Evaluate a closed-form expression over a parameter grid.
    Analytic(analytic::AnalyticArgs),
    /// Run a named comparison experiment and write a JSON report.
    Compare(compare::CompareArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// End of the time grid; defaults to max(100, 40·μ_max).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Grid-only reflection and crossing detection, without bridge corrections.
    #[arg(long)]
    pub plain: bool,
}

impl SimArgs {
    pub fn mc(&self) -> McOpts {
        McOpts {
            seed: self.seed,
            dt: self.dt,
            horizon: self.horizon,
            sim: if self.plain { SimOpts::plain() } else { SimOpts::default() },
        }
    }
}

/// How a command finished when it did not error.
pub enum Outcome {
    Written(PathBuf),
    /// The report was written but an asserted check failed.
    CheckFailed(PathBuf),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::SampleLimit(args) => sample_limit::run(args, &cli.output_dir),
        Command::Analytic(args) => analytic::run(args, &cli.output_dir),
        Command::Compare(args) => compare::run(args, &cli.output_dir),
    };
    match result {
        Ok(Outcome::Written(path)) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Ok(Outcome::CheckFailed(path)) => {
            println!("{}", path.display());
            eprintln!("error: an asserted check failed, see the report");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
