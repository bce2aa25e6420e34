use std::path::{Path, PathBuf};

use sheetkg_api::{ConfigError, ServiceConfig};
use sheetkg_core::extract::Selection;
use sheetkg_core::graph::{GraphName, RdfFormat};
use sheetkg_core::session::{replay_with, ProjectConfig, ReplayError, Session, SessionError};
use sheetkg_core::workbook::{load_workbook, workbook_stats, SourceFormat, WorkbookError, WorkbookStats};
use thiserror::Error;

use crate::config::FileConfig;
use crate::{Cli, Command, Format, GraphArg};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing --{0} (flag or config file)")]
    Missing(&'static str),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Service(#[from] ConfigError),
    #[error("{path}: {source}")]
    Workbook { path: PathBuf, source: WorkbookError },
    #[error("{path}: {source}")]
    Replay { path: PathBuf, source: ReplayError },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("unknown cell {0:?}; use Sheet!A1 or a cell URI")]
    UnknownCell(String),
    #[error("server failed: {0}")]
    Serve(std::io::Error),
}

impl CliError {
    /// 2 for a workbook that does not match the log, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Replay {
                source: ReplayError::ChecksumMismatch { .. },
                ..
            } => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn source_format(path: &Path, bytes: &[u8]) -> SourceFormat {
    SourceFormat::from_path(path).unwrap_or_else(|| SourceFormat::sniff(bytes))
}

fn rdf(format: Format) -> RdfFormat {
    match format {
        Format::Turtle => RdfFormat::Turtle,
        Format::Ntriples => RdfFormat::NTriples,
    }
}

struct Settings {
    file: FileConfig,
    project: ProjectConfig,
}

impl Settings {
    fn workbook(&self, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        flag.or_else(|| self.file.workbook.clone()).ok_or(CliError::Missing("workbook"))
    }

    fn log(&self, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        flag.or_else(|| self.file.log.clone()).ok_or(CliError::Missing("log"))
    }

    fn format(&self, flag: Option<Format>) -> Option<Format> {
        flag.or(self.file.format)
    }

    /// Loads the workbook and replays the log over it.
    fn session(&self, workbook: Option<PathBuf>, log: Option<PathBuf>) -> Result<Session, CliError> {
        let wb_path = self.workbook(workbook)?;
        let log_path = self.log(log)?;
        let bytes = read(&wb_path)?;
        let log = String::from_utf8(read(&log_path)?).map_err(|e| CliError::Replay {
            path: log_path.clone(),
            source: ReplayError::Corrupt {
                line: 0,
                message: e.to_string(),
            },
        })?;
        let session = if log.trim().is_empty() {
            Session::open(&bytes, source_format(&wb_path, &bytes), self.project.clone())
                .map_err(|e| match e {
                    SessionError::Workbook(source) => CliError::Workbook { path: wb_path, source },
                    other => other.into(),
                })?
        } else {
            replay_with(&bytes, &log, self.project.clone()).map_err(|source| CliError::Replay {
                path: log_path,
                source,
            })?
        };
        if session.config() != &self.project && self.project != ProjectConfig::default() {
            eprintln!("warning: the log header's base URI and epoch take precedence over flags");
        }
        Ok(session)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?.resolve_paths(cli.config.as_deref());
    let mut project = ProjectConfig::default();
    if let Some(b) = cli.base_uri.clone().or_else(|| file.base_uri.clone()) {
        project.base_uri = b;
    }
    if let Some(e) = cli.epoch.or(file.epoch) {
        project.epoch = e;
    }
    let settings = Settings { file, project };

    match cli.command {
        Command::Replay {
            workbook,
            log,
            out,
            format,
        } => {
            let out = out.or_else(|| settings.file.out.clone()).ok_or(CliError::Missing("out"))?;
            let session = settings.session(workbook, log)?;
            replay_outputs(&session, &out, settings.format(format))
        }
        Command::Export {
            workbook,
            log,
            graph,
            format,
            output,
        } => {
            let session = settings.session(workbook, log)?;
            let name = match graph.or(settings.file.graph).unwrap_or(GraphArg::Knowledge) {
                GraphArg::Matching => GraphName::Matching,
                GraphArg::Knowledge => GraphName::Knowledge,
            };
            let text = session.export(name, rdf(settings.format(format).unwrap_or(Format::Turtle)));
            emit(output.as_deref(), &text)
        }
        Command::Inspect {
            workbook,
            log,
            cells,
            format,
        } => {
            let session = settings.session(workbook, log)?;
            let selection = Selection::new(
                cells
                    .iter()
                    .map(|c| {
                        session
                            .workbook()
                            .parse_address(c)
                            .or_else(|| session.linker().resolve(c).ok())
                            .ok_or_else(|| CliError::UnknownCell(c.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            );
            let text = session.inspection(&selection, rdf(settings.format(format).unwrap_or(Format::Turtle)))?;
            emit(None, &text)
        }
        Command::StatsReport {
            workbook,
            header_rows,
            json,
        } => {
            let path = settings.workbook(workbook)?;
            let bytes = read(&path)?;
            let wb = load_workbook(&bytes, source_format(&path, &bytes))
                .map_err(|source| CliError::Workbook { path, source })?;
            let stats = workbook_stats(&wb, header_rows);
            let text = if json {
                serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n"
            } else {
                stats_table(&stats)
            };
            emit(None, &text)
        }
        Command::Serve {
            host,
            port,
            storage_dir,
        } => {
            let mut config = ServiceConfig::load(cli.config.as_deref())?;
            config.base_uri = settings.project.base_uri.clone();
            config.epoch = settings.project.epoch;
            if let Some(h) = host {
                config.host = h;
            }
            if let Some(p) = port {
                config.port = p;
            }
            if let Some(d) = storage_dir {
                config.storage_dir = Some(d);
            }
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
            runtime.block_on(sheetkg_api::serve(config)).map_err(CliError::Serve)
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => write(path, text),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            // A closed pipe is not an error for a printing command.
            let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
            Ok(())
        }
    }
}

/// Writes `<graph>.nt`, `<graph>.ttl` and `instances.json` into `out`.
fn replay_outputs(session: &Session, out: &Path, only: Option<Format>) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let formats: Vec<RdfFormat> = match only {
        Some(f) => vec![rdf(f)],
        None => vec![RdfFormat::NTriples, RdfFormat::Turtle],
    };
    for graph in [GraphName::Matching, GraphName::Knowledge] {
        for &format in &formats {
            let path = out.join(format!("{}.{}", graph.as_str(), format.extension()));
            write(&path, &session.export(graph, format))?;
        }
    }
    let report = serde_json::to_string_pretty(&session.instance_report()).expect("report serializes") + "\n";
    write(&out.join("instances.json"), &report)
}

fn stats_table(stats: &WorkbookStats) -> String {
    let width = stats
        .sheets
        .iter()
        .map(|s| s.name.chars().count())
        .chain([5])
        .max()
        .unwrap_or(5);
    let mut out = format!(
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n",
        "sheet", "rows", "columns", "cells", "strings", "numerics", "formulas"
    );
    for s in stats.sheets.iter().chain([&stats.total]) {
        out.push_str(&format!(
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n",
            s.name, s.rows, s.columns, s.cells, s.strings, s.numerics, s.formulas
        ));
    }
    out
}
