//! Command-line front end: self-validation, canned experiments, and
//! config-driven optimization or simulation.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edgecache::harness::commands::{cmd_optimize, cmd_simulate};
use edgecache::harness::config::Config;
use edgecache::harness::experiments::{render_tables, run_exp1, run_exp2, run_fig2, ExperimentSpec};
use edgecache::harness::validate::run_validation;
use edgecache::Error;

#[derive(Parser)]
#[command(name = "edgecache", version, about = "Timer-based caching with broadcast overhearing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in invariant checks.
    Validate {
        /// Fewer random instances and shorter simulations.
        #[arg(long)]
        quick: bool,
    },
    /// Single LRU cache versus the analytic envelope, swept over capacity.
    Fig2(ExperimentArgs),
    /// Policy comparison under Poisson broadcasts, swept over cache size.
    Exp1(ExperimentArgs),
    /// Estimated mixture policy under miss-triggered broadcasts, swept
    /// over the number of caches.
    Exp2(ExperimentArgs),
    /// Solve for the optimal policies of a JSON config.
    Optimize {
        /// Path to the JSON config.
        config: PathBuf,
    },
    /// Simulate the policy named in a JSON config.
    Simulate {
        /// Path to the JSON config.
        config: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// First sweep-axis values (comma separated); default per experiment.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    /// Second sweep-axis values, for experiments with two sweeps.
    #[arg(long, value_delimiter = ',')]
    sweep2: Option<Vec<f64>>,
    /// Event-driven estimation phase length.
    #[arg(long)]
    estimation_horizon: Option<f64>,
    /// Full published problem sizes (slower).
    #[arg(long)]
    paper_scale: bool,
}

impl ExperimentArgs {
    fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            seed: self.seed,
            replications: self.replications,
            horizon: self.horizon,
            sweep: self.sweep.clone(),
            sweep2: self.sweep2.clone(),
            estimation_horizon: self.estimation_horizon,
            paper_scale: self.paper_scale,
        }
    }
}

fn init_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("EDGECACHE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| format!("EDGECACHE_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            return Err("EDGECACHE_THREADS must be a positive integer, got 0".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("thread pool setup failed: {e}"))?;
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::InvalidConfig(_)
        | Error::InvalidProfile(_)
        | Error::InvalidPolicy(_)
        | Error::Io(_)
        | Error::Json(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Validate { quick } => {
            let report = run_validation(quick)?;
            print!("{}", report.render());
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Fig2(args) => {
            print!("{}", render_tables(&run_fig2(&args.spec())?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Exp1(args) => {
            print!("{}", render_tables(&run_exp1(&args.spec())?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Exp2(args) => {
            print!("{}", render_tables(&run_exp2(&args.spec())?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize { config } => {
            let cfg = Config::from_path(&config)?;
            print!("{}", cmd_optimize(&cfg)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { config } => {
            let cfg = Config::from_path(&config)?;
            print!("{}", cmd_simulate(&cfg)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
