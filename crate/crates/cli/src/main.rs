mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::ToyMode;
use config::{RunArgs, UsageError};

/// Uncertainty quantification benchmark across training-set sizes.
#[derive(Debug, Parser)]
#[command(name = "uqbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train and evaluate methods over a range of samples per class; writes one CSV per method
    Sweep(RunArgs),
    /// Check analytic gradients of every layer kind and loss against finite differences
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrupt the analytic gradients (negative control; must fail)
        #[arg(long)]
        inject_fault: bool,
    },
    /// Dump Two Moons confidence grids or regression curves for plotting
    Toy {
        #[arg(value_enum)]
        mode: ToyMode,
        #[command(flatten)]
        args: RunArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => commands::sweep(args),
        Command::Gradcheck { seed, inject_fault } => match commands::gradcheck(seed, inject_fault) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
        Command::Toy { mode, args } => commands::toy(mode, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("error: {e}");
                ExitCode::from(2)
            } else {
                let mut msg = e.to_string();
                for cause in e.chain().skip(1) {
                    let c = cause.to_string();
                    if !msg.contains(&c) {
                        msg = format!("{msg}: {c}");
                    }
                }
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
        }
    }
}
