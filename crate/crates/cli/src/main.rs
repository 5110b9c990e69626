//! gradcomp: run compression experiments from TOML configs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status beyond success and configuration errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violation,
    Diverged,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation => 2,
            Status::Diverged => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gradcomp", version, about = "Gradient compression experiments")]
struct Cli {
    /// TOML file with the subcommand's parameters; defaults apply to omitted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run directory (default: runs/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check claimed class parameters for each operator.
    Verify,
    /// Compressed gradient descent on one objective.
    Cgd,
    /// Error-feedback SGD (or naive distributed CGD) across nodes.
    Distributed,
    /// Naive distributed CGD on a divergent instance.
    Counterexample,
    /// Expected savings of Top-k over Rand-k.
    Stats,
    /// Bits per coordinate against normalized variance.
    BenchBits,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Cgd => "cgd",
            Command::Distributed => "distributed",
            Command::Counterexample => "counterexample",
            Command::Stats => "stats",
            Command::BenchBits => "bench-bits",
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    if let Some(jobs) = cli.jobs {
        anyhow::ensure!(jobs > 0, "--jobs must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?,
        None => String::new(),
    };
    let name = cli.command.name();
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(name));
    let args = commands::Args { name, text: &text, seed: cli.seed, out: &out };
    match cli.command {
        Command::Verify => commands::verify(&args),
        Command::Cgd => commands::cgd(&args),
        Command::Distributed => commands::distributed(&args),
        Command::Counterexample => commands::counterexample(&args),
        Command::Stats => commands::stats(&args),
        Command::BenchBits => commands::bench_bits(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
