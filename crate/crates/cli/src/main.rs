mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{expand_config, Cli};

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Runs the subcommand and writes its outputs; `Ok(false)` when the command
/// itself reports failure.
fn run(cli: &Cli) -> anyhow::Result<bool> {
    let report = commands::run(&cli.command)?;
    let config = serde_json::to_value(&cli.command)?;
    let data = report.render(cli.format, cli.command.name(), &config);
    let summary = report.summary_text();
    match &cli.out {
        Some(path) => {
            std::fs::write(path, data)?;
            if !cli.quiet {
                print!("{summary}");
            }
        }
        None => {
            std::io::stdout().write_all(data.as_bytes())?;
            if !cli.quiet {
                eprint!("{summary}");
            }
        }
    }
    Ok(!report.failed)
}
