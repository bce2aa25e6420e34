//! JSON-lines operation log and deterministic replay.
//!
//! The first line is an `open` header naming the workbook checksum and the
//! project configuration. Every later line is one successful operation with
//! its full parameters; graph-changing operations also carry the resulting
//! [`Delta`], which replay recomputes and compares.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CommitId, ExtractorRequest, ProjectConfig, Session, SessionError, StagingEdit, StagingId};
use crate::collector::CollectorConfig;
use crate::extract::Selection;
use crate::graph::Resource;
use crate::workbook::{checksum, SourceFormat};

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// Net graph change of one operation. The digest covers the sorted changed
/// triples, so equal deltas mean identical changes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub matching_added: usize,
    pub matching_removed: usize,
    pub knowledge_added: usize,
    pub knowledge_removed: usize,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LogOp {
    Open {
        schema: u32,
        checksum: String,
        format: SourceFormat,
        base_uri: String,
        epoch: NaiveDate,
    },
    Stage {
        staging: StagingId,
        request: ExtractorRequest,
    },
    Edit {
        staging: StagingId,
        edit: StagingEdit,
    },
    Discard {
        staging: StagingId,
    },
    Commit {
        staging: StagingId,
        commit: CommitId,
    },
    RemoveAnnotations {
        selection: Selection,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        predicate: Option<Resource>,
    },
    Undo {
        commit: CommitId,
    },
    Collect {
        config: CollectorConfig,
        commit: CommitId,
    },
    Lift {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        predicate: Option<Resource>,
        commit: CommitId,
    },
}

impl LogOp {
    pub fn name(&self) -> &'static str {
        match self {
            LogOp::Open { .. } => "open",
            LogOp::Stage { .. } => "stage",
            LogOp::Edit { .. } => "edit",
            LogOp::Discard { .. } => "discard",
            LogOp::Commit { .. } => "commit",
            LogOp::RemoveAnnotations { .. } => "remove_annotations",
            LogOp::Undo { .. } => "undo",
            LogOp::Collect { .. } => "collect",
            LogOp::Lift { .. } => "lift",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    #[serde(flatten)]
    pub op: LogOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Delta>,
}

impl LogEntry {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log entries always serialize")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("log does not start with an `open` header")]
    MissingHeader,
    #[error("unsupported log schema version {0}")]
    UnsupportedSchema(u32),
    #[error("workbook checksum mismatch: log expects {expected}, file has {actual}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error("line {line}: corrupted log entry: {message}")]
    Corrupt { line: usize, message: String },
    #[error("line {line}: {source}")]
    Operation { line: usize, source: SessionError },
    #[error("line {line}: replay diverged: {message}")]
    Divergence { line: usize, message: String },
    #[error(transparent)]
    Open(SessionError),
}

fn check_id<T: PartialEq + std::fmt::Display>(line: usize, logged: &T, got: &T) -> Result<(), ReplayError> {
    if logged == got {
        Ok(())
    } else {
        Err(ReplayError::Divergence {
            line,
            message: format!("expected id {logged}, replay produced {got}"),
        })
    }
}

/// Rebuilds a session from the workbook bytes and a JSON-lines log.
pub fn replay(workbook: &[u8], log: &str) -> Result<Session, ReplayError> {
    replay_with(workbook, log, ProjectConfig::default())
}

/// Like [`replay`]; `config` is used only when the log is empty, otherwise
/// the log header decides.
pub fn replay_with(workbook: &[u8], log: &str, config: ProjectConfig) -> Result<Session, ReplayError> {
    let mut lines = log
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let parse = |line: usize, text: &str| {
        serde_json::from_str::<LogEntry>(text).map_err(|e| ReplayError::Corrupt {
            line,
            message: e.to_string(),
        })
    };
    let Some((first, text)) = lines.next() else {
        let format = SourceFormat::sniff(workbook);
        return Session::open(workbook, format, config).map_err(ReplayError::Open);
    };
    let header = parse(first, text)?;
    let LogOp::Open {
        schema,
        checksum: expected,
        format,
        base_uri,
        epoch,
    } = header.op
    else {
        return Err(ReplayError::MissingHeader);
    };
    if schema != LOG_SCHEMA_VERSION {
        return Err(ReplayError::UnsupportedSchema(schema));
    }
    let actual = checksum(workbook);
    if actual != expected {
        return Err(ReplayError::ChecksumMismatch { expected, actual });
    }
    let mut session =
        Session::open(workbook, format, ProjectConfig { base_uri, epoch }).map_err(ReplayError::Open)?;

    for (line, text) in lines {
        let entry = parse(line, text)?;
        let op_err = |source| ReplayError::Operation { line, source };
        match &entry.op {
            LogOp::Open { .. } => {
                return Err(ReplayError::Corrupt {
                    line,
                    message: "unexpected second `open` header".into(),
                })
            }
            LogOp::Stage { staging, request } => {
                let got = session.stage(request.clone()).map_err(op_err)?.id.clone();
                check_id(line, staging, &got)?;
            }
            LogOp::Edit { staging, edit } => {
                session.edit(staging, edit.clone()).map_err(op_err)?;
            }
            LogOp::Discard { staging } => session.discard(staging).map_err(op_err)?,
            LogOp::Commit { staging, commit } => {
                let got = session.commit(staging).map_err(op_err)?.id;
                check_id(line, commit, &got)?;
            }
            LogOp::RemoveAnnotations { selection, predicate } => {
                session
                    .remove_annotations(selection, predicate.as_ref())
                    .map_err(op_err)?;
            }
            LogOp::Undo { commit } => {
                session.undo(commit).map_err(op_err)?;
            }
            LogOp::Collect { config, commit } => {
                let (_, got) = session.collect(config.clone()).map_err(op_err)?;
                check_id(line, commit, &got)?;
            }
            LogOp::Lift { predicate, commit } => {
                let (_, got) = session.lift(predicate.as_ref()).map_err(op_err)?;
                check_id(line, commit, &got)?;
            }
        }
        let replayed = session.log.last().and_then(|e| e.delta.as_ref());
        if replayed != entry.delta.as_ref() {
            return Err(ReplayError::Divergence {
                line,
                message: format!("{} produced a different graph change", entry.op.name()),
            });
        }
    }
    Ok(session)
}
