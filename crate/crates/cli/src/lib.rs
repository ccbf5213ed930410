//! Command-line front end for the `spdgeom` library.

pub mod check;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;

use clap::Parser;

use crate::check::{run_check, CheckOptions};
use crate::config::{Cli, Command, RunConfig};
use crate::dataset::DatasetFile;
use crate::error::CliError;

/// Runs one invocation and returns its standard output.
pub fn run(args: &[String]) -> Result<String, CliError> {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => return Ok(e.to_string()),
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    match &cli.command {
        Command::Check { dims } => {
            let config = RunConfig::resolve(&cli.global, dims)?;
            let report = run_check(&CheckOptions {
                seed: config.seed,
                trials: config.trials,
                dims: dims.clone(),
                only: config.only,
                metric: config.metric,
            })?;
            if report.passed() {
                Ok(report.render())
            } else {
                print!("{}", report.render());
                Err(CliError::SuiteFailed {
                    failed: report.failures(),
                    total: report.lines.len(),
                })
            }
        }
        Command::Dist { file, i, j } => {
            let data = DatasetFile::read(file)?;
            commands::cmd_dist(&RunConfig::resolve(&cli.global, &[data.n])?, &data, *i, *j)
        }
        Command::Interp { file, i, j } => {
            let data = DatasetFile::read(file)?;
            commands::cmd_interp(&RunConfig::resolve(&cli.global, &[data.n])?, &data, *i, *j)
        }
        Command::Mean { file } => {
            let data = DatasetFile::read(file)?;
            commands::cmd_mean(&RunConfig::resolve(&cli.global, &[data.n])?, &data)
        }
        Command::Pca { file, k } => {
            let data = DatasetFile::read(file)?;
            commands::cmd_pca(&RunConfig::resolve(&cli.global, &[data.n])?, &data, *k)
        }
    }
}
