use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sgld::commands::{run, RunOptions};
use sgld::config::{ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "sgld", version, about = "SGLD with minibatch oracles, reflection couplings and certified constants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Contraction geometry, distance function, rate and step-size budget.
    Constants(Args),
    /// Independent chains: moment bounds and divergence.
    Simulate(Args),
    /// Coupled pairs: decay rate of E f(|Z|).
    Couple(Args),
    /// Invariant-measure bias against a Gaussian reference.
    Bias(Args),
    /// Sampled check of the declared assumption constants.
    Verify(Args),
    /// Tail profile of the within-step noise supremum.
    Tails(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Caps the number of worker threads.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILED_VERDICT: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Constants(a) => (ExperimentKind::Constants, a),
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::Couple(a) => (ExperimentKind::Couple, a),
        Command::Bias(a) => (ExperimentKind::Bias, a),
        Command::Verify(a) => (ExperimentKind::Verify, a),
        Command::Tails(a) => (ExperimentKind::Tails, a),
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let opts = RunOptions {
        seed: args.seed,
        out: args.out,
        threads: args.threads,
    };
    match run(kind, &config, &opts) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED_VERDICT)
            }
        }
        Err(e) if e.is_config() => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
