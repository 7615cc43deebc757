//! Command-line front end: argument parsing, input loading and report output.

pub mod commands;
pub mod error;
pub mod input;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{AttenRange, Outcome};
use crate::error::{CliError, CliResult};
use crate::input::{Catalog, NetworkPlanFile, SystemConfig};
use crate::report::{write_atomically, Format};

#[derive(Debug, Parser)]
#[command(
    name = "optofabric",
    version,
    about = "Interconnect fabric planning reports"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write report files into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Link-length histogram and electrical/optical split of an all-to-all grid.
    Topology {
        #[arg(long)]
        config: PathBuf,
    },
    /// Channel assignments, collisions and reachability of a broadcast network.
    Plan {
        #[arg(long)]
        network: PathBuf,
    },
    /// Per-stage power ledger and margin for one path, or all paths.
    Budget {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        path: Option<String>,
    },
    /// BER versus added attenuation.
    Sweep {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        path: String,
        /// start:stop:step in dB
        #[arg(long, default_value = "0:30:0.5", allow_hyphen_values = true)]
        atten: AttenRange,
    },
    /// Predicted margin for larger star couplers.
    Scale {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        min_margin: Option<f64>,
    },
    /// Energy, density and cost comparison tables.
    Metrics {
        #[arg(long)]
        catalog: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Topology { .. } => "topology",
            Command::Plan { .. } => "plan",
            Command::Budget { .. } => "budget",
            Command::Sweep { .. } => "sweep",
            Command::Scale { .. } => "scale",
            Command::Metrics { .. } => "metrics",
        }
    }

    /// Canonical echo of the analysis arguments; output location is left out.
    pub fn echo(&self, format: Format) -> String {
        let mut s = self.name().to_owned();
        let mut arg = |flag: &str, v: String| s.push_str(&format!(" --{flag} {v}"));
        match self {
            Command::Topology { config } => arg("config", config.display().to_string()),
            Command::Plan { network } => arg("network", network.display().to_string()),
            Command::Budget { network, path } => {
                arg("network", network.display().to_string());
                if let Some(p) = path {
                    arg("path", p.clone());
                }
            }
            Command::Sweep {
                network,
                path,
                atten,
            } => {
                arg("network", network.display().to_string());
                arg("path", path.clone());
                arg("atten", atten.to_string());
            }
            Command::Scale {
                network,
                min_margin,
            } => {
                arg("network", network.display().to_string());
                if let Some(m) = min_margin {
                    arg("min-margin", m.to_string());
                }
            }
            Command::Metrics { catalog } => arg("catalog", catalog.display().to_string()),
        }
        let f = match format {
            Format::Text => "text",
            Format::Csv => "csv",
        };
        s.push_str(&format!(" --format {f}"));
        s
    }
}

/// Run the analysis for a parsed command line.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let mut outcome = match &cli.command {
        Command::Topology { config } => commands::topology(&SystemConfig::load(config)?)?,
        Command::Plan { network } => commands::plan(&NetworkPlanFile::load(network)?)?,
        Command::Budget { network, path } => {
            commands::budget(&NetworkPlanFile::load(network)?, path.as_deref())?
        }
        Command::Sweep {
            network,
            path,
            atten,
        } => commands::sweep(&NetworkPlanFile::load(network)?, path, *atten)?,
        Command::Scale {
            network,
            min_margin,
        } => commands::scale(&NetworkPlanFile::load(network)?, *min_margin)?,
        Command::Metrics { catalog } => commands::metrics(&Catalog::load(catalog)?)?,
    };
    outcome.report.command = cli.command.echo(cli.output.format);
    Ok(outcome)
}

/// Run and emit; returns the process exit status.
pub fn execute(cli: &Cli) -> u8 {
    match run(cli).and_then(|o| emit(cli, &o).map(|_| o.failure)) {
        Ok(None) => 0,
        Ok(Some(failure)) | Err(failure) => {
            eprintln!("error: {failure}");
            failure.code()
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> CliResult<()> {
    let report = &outcome.report;
    let format = cli.output.format;
    if format == Format::Csv {
        // CSV carries tables only; the rest goes to stderr
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        for n in &report.notes {
            eprintln!("note: {n}");
        }
    }
    match &cli.output.out {
        Some(dir) => {
            write_atomically(dir, &report.files(cli.command.name(), format))?;
        }
        None => {
            let body = match format {
                Format::Text => report.render_text(),
                Format::Csv => report.render_csv(),
            };
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::input(format!("cannot write output: {e}")))?;
        }
    }
    Ok(())
}
