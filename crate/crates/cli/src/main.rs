use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use v2i_handover::handover::Scheme;
use v2i_handover::scenario::ScenarioError;
use v2i_handover::sweep::{self, RouteSelection, RunSpec, SchemeSpec};
use v2i_handover::Error;

/// Handover simulator for sensing-assisted NR V2I networks.
#[derive(Debug, Parser)]
#[command(name = "v2i-ho", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a sweep over schemes, TTT/CTT values, seeds and routes.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated schemes; `a3` expands over `--offsets`.
        #[arg(long, value_delimiter = ',', default_value = "a3,distance,probability")]
        scheme: Vec<Scheme>,
        /// TTT (A3, in SS-burst periods) or CTT (sensing) values.
        #[arg(long, value_delimiter = ',', default_value = "0,2,4,8,16,32")]
        values: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// A3 RSRP offsets in dB.
        #[arg(long, value_delimiter = ',', default_value = "1,3")]
        offsets: Vec<f64>,
        /// `random` (one uniformly drawn route per seed), `all`, or a route id.
        #[arg(long, default_value = "random")]
        route: RouteSelection,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the metrics of a logged run.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Check a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn report_error(err: &Error) {
    match err {
        Error::Scenario(ScenarioError::Invalid { violations }) => {
            eprintln!("error: invalid scenario");
            for v in violations {
                eprintln!("  {v}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { scenario, scheme, values, seeds, offsets, route, out } => {
            let spec =
                RunSpec { scenario, schemes: SchemeSpec::expand(&scheme, &offsets), values, seeds, routes: route, out };
            let summary = sweep::cmd_run(&spec)?;
            println!("{} cells written; aggregate: {}", summary.cells, summary.aggregate.display());
        }
        Command::Replay { log } => {
            let report = sweep::cmd_replay(&log)?;
            print!("{}", sweep::replay_json(&report)?);
        }
        Command::Validate { scenario } => {
            print!("{}", sweep::cmd_validate(&scenario)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            report_error(&err);
            ExitCode::FAILURE
        }
    }
}
