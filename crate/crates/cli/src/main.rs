mod commands;
mod config;

use std::process::ExitCode;

use clap::{ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand};

use config::{Flags, Settings};

/// Sibling regression for generalized linear models.
#[derive(Debug, Parser)]
#[command(name = "sglm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic panel with ground-truth columns
    Simulate(Flags),
    /// Fit a GLM to each response series
    Fit(Flags),
    /// Remove the shared noise from the target series
    Denoise(Flags),
    /// Monte-Carlo sweep over series counts and estimators
    Benchmark(Flags),
    /// All residual kinds for every series
    Residuals(Flags),
}

type Runner = fn(&Settings) -> anyhow::Result<()>;

fn main() -> ExitCode {
    let color = if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        ColorChoice::Never
    } else {
        ColorChoice::Auto
    };
    let matches = Cli::command().color(color).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let (name, flags, run): (&str, &Flags, Runner) = match &cli.command {
        Command::Simulate(f) => ("simulate", f, commands::simulate),
        Command::Fit(f) => ("fit", f, commands::fit),
        Command::Denoise(f) => ("denoise", f, commands::denoise),
        Command::Benchmark(f) => ("benchmark", f, commands::benchmark),
        Command::Residuals(f) => ("residuals", f, commands::residuals),
    };
    match Settings::resolve(name, flags).and_then(|s| run(&s)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {:#}", commands::error_class(&e), e);
            ExitCode::FAILURE
        }
    }
}
