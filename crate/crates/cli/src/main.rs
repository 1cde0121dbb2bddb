use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csh_cli::{commands, Outcome, RunConfig};

/// Radial solver and verification suite for the nonlocal Chern-Simons-Higgs
/// system with a neutral scalar field.
#[derive(Parser)]
#[command(name = "csh", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.directory` (default ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed, overriding `seed` in the config (default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on standard output
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Find a nontrivial solution by the mountain-pass method
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Run the randomized checks of the neutral-field and functional properties
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Solve over a geometric range of couplings
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "e")]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Sample the fibering map of the negative direction
    Fiber {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

fn load(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output.directory = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    for w in cfg.warnings() {
        eprintln!("{w}");
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Solve { common } => commands::solve(&load(&common)?, common.quiet),
        Command::Verify { common, trials } => commands::verify(&load(&common)?, trials, common.quiet),
        Command::Sweep {
            common,
            param,
            from,
            to,
            steps,
        } => commands::sweep(&load(&common)?, &param, from, to, steps, common.quiet),
        Command::Fiber { common, tmax, samples } => commands::fiber(&load(&common)?, tmax, samples, common.quiet),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
