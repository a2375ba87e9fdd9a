use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qcap_core::rates::SlackParams;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "oneshot-qcap", version, about = "One-shot rate regions and protocol simulation for quantum wiretap channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Relative entropies of two states, or informations of a bipartite state.
    Divergence,
    /// Achievable, converse and asymptotic rate pairs over an encoder grid.
    Region,
    /// Exact protocol simulation for the input's code sizes.
    Simulate,
    /// Run every property suite and print a summary table.
    Verify,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// JSON input document.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Destination file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, global = true, default_value_t = 0.1)]
    pub eps_prime: f64,
    #[arg(long, global = true, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, global = true, default_value_t = 0.1)]
    pub delta_prime: f64,
    #[arg(long, global = true, default_value_t = 0.05)]
    pub gamma: f64,
    /// Points per axis of the encoder grid.
    #[arg(long, global = true, default_value_t = 3)]
    pub grid: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest composite dimension; overrides ONESHOT_QCAP_DIM_CAP.
    #[arg(long, global = true)]
    pub dim_cap: Option<usize>,
    /// Also draw the region frontier to this SVG file.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Code sizes `M,L,K`, overriding the document's `sizes`.
    #[arg(long, global = true)]
    pub sizes: Option<String>,
    /// Also write the full protocol report as JSON.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
}

/// Everything that determines a run's output, recorded in every header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub slacks: SlackParams,
    pub grid: usize,
    pub seed: u64,
    pub dim_cap: usize,
    pub sizes: Option<[usize; 3]>,
    pub svg: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

fn parse_sizes(s: &str) -> CliResult<[usize; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Input(format!("--sizes expects M,L,K, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| bad())?;
    }
    Ok(out)
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let o = &cli.opts;
        let slacks = SlackParams::new(o.eps, o.eps_prime, o.delta, o.delta_prime, o.gamma)?;
        if let Some(cap) = o.dim_cap {
            if cap == 0 {
                return Err(CliError::Input("--dim-cap must be positive".into()));
            }
            qcap_core::qmat::configure_dim_cap(cap);
        }
        Ok(Self {
            command: cli.command,
            input: o.input.clone(),
            output: o.output.clone(),
            slacks,
            grid: o.grid,
            seed: o.seed,
            dim_cap: qcap_core::qmat::dim_cap(),
            sizes: o.sizes.as_deref().map(parse_sizes).transpose()?,
            svg: o.svg.clone(),
            json: o.json.clone(),
        })
    }

    pub fn require_input(&self) -> CliResult<&PathBuf> {
        self.input
            .as_ref()
            .ok_or_else(|| CliError::Input("this command needs --input".into()))
    }
}
