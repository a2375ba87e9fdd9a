//! Command-line front end for the `qcap-core` library: divergences of two
//! states, rate-region sweeps, exact protocol simulation and the property
//! suite runner.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod output;
pub mod svg;
pub mod verify;

use config::{Cli, Command, RunConfig};
use error::CliResult;

/// Run one parsed invocation, writing its outputs. Returns the exit status.
pub fn execute(cli: &Cli) -> CliResult<i32> {
    let cfg = RunConfig::from_cli(cli)?;
    let out = match cfg.command {
        Command::Divergence => commands::cmd_divergence(&cfg)?,
        Command::Region => commands::cmd_region(&cfg)?,
        Command::Simulate => commands::cmd_simulate(&cfg)?,
        Command::Verify => commands::cmd_verify(&cfg)?,
    };
    output::emit(cfg.output.as_deref(), &out.text)?;
    for (path, text) in &out.files {
        output::emit(Some(path), text)?;
    }
    Ok(out.status)
}

/// [`execute`] with errors reported on standard error.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("oneshot-qcap: {e}");
            e.exit_code()
        }
    }
}
