//! `sheetkg`: batch replay, export and reporting, plus the HTTP service.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sheetkg", version, about = "Build RDF knowledge graphs from messy spreadsheets")]
pub struct Cli {
    /// TOML file supplying defaults for every flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Namespace for minted IRIs and cell links.
    #[arg(long, global = true)]
    pub base_uri: Option<String>,
    /// Day zero of numeric date serials.
    #[arg(long, global = true, value_name = "YYYY-MM-DD")]
    pub epoch: Option<NaiveDate>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Turtle,
    Ntriples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphArg {
    Matching,
    Knowledge,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replays a session log and writes both graphs and the instance report.
    Replay {
        #[arg(long)]
        workbook: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write only this format instead of both.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Replays a session log and prints one graph.
    Export {
        #[arg(long)]
        workbook: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
        /// Defaults to the knowledge graph.
        #[arg(long, value_enum)]
        graph: Option<GraphArg>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Write to this file instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Prints the statements about cells, given as `Sheet!A1` or cell URI.
    Inspect {
        #[arg(long)]
        workbook: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long = "cell", required = true)]
        cells: Vec<String>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Prints rows, columns and cell-type counts per sheet.
    StatsReport {
        #[arg(long)]
        workbook: Option<PathBuf>,
        /// Leading rows excluded from all counts except columns.
        #[arg(long, default_value_t = 0)]
        header_rows: u32,
        #[arg(long)]
        json: bool,
    },
    /// Runs the HTTP API.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        storage_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
