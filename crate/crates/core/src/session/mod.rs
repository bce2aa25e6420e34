//! A project session: one workbook, its two graphs, the open stagings and
//! an append-only operation log from which the whole state can be rebuilt.

mod log;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::collector::{
    collect_instances, lift_relationships, CollectError, CollectReport, CollectorConfig, Instance, InstanceReport,
    LiftReport, SkippedRow,
};
use crate::extract::{
    apply_person_edit, date_extract, descriptive_statistics, person_extract, regex_extract,
    relationship_discover, DateParams, ExtractError, PersonEdit, PersonIndex, RegexMode, RegexParams,
    RegexStaging, RelationParams, RelationshipStaging, Selection, StatSummary, StatsParams,
};
use crate::extract::{DateStaging, RelationPair};
use crate::graph::{
    ntriples_line, serialize, Graph, GraphError, GraphName, GraphStore, Literal, Minter, Pattern,
    RdfFormat, Resource, Term, Triple, Vocabulary,
};
use crate::workbook::{load_workbook, CellRef, DeepLinker, LinkError, SourceFormat, Workbook, WorkbookError};

pub use self::log::{replay, replay_with, Delta, LogEntry, LogOp, ReplayError, LOG_SCHEMA_VERSION};

pub const DEFAULT_BASE_URI: &str = "http://example.org/sheetkg/";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectConfig {
    pub base_uri: String,
    /// Day zero for numeric date serials.
    pub epoch: NaiveDate,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            base_uri: DEFAULT_BASE_URI.to_string(),
            epoch: crate::extract::date::default_epoch(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error(transparent)]
    Workbook(#[from] WorkbookError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error("staging {0} not found")]
    StagingNotFound(String),
    #[error("commit {0} not found")]
    CommitNotFound(String),
    #[error("staging {id} is {status}")]
    StagingClosed { id: String, status: &'static str },
    #[error("edit `{edit}` does not apply to a {kind} staging")]
    EditMismatch { edit: &'static str, kind: &'static str },
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("commit {0} was already undone")]
    AlreadyUndone(String),
    #[error("cell URI {0} cannot be used as a knowledge-graph term")]
    CellUriInKnowledge(String),
}

impl SessionError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Workbook(_) => "invalid-workbook",
            SessionError::Extract(e) => match e {
                ExtractError::EmptySelection => "empty-selection",
                ExtractError::UnresolvableCell(_) => "unresolvable-cell",
                ExtractError::InvalidPattern { .. } => "invalid-pattern",
                ExtractError::MissingGroup { .. } => "missing-group",
                ExtractError::Transform(_) => "invalid-transform",
                ExtractError::Graph(_) => "invalid-parameter",
                ExtractError::UnknownPerson(_) => "person-not-found",
                ExtractError::InvalidEdit(_) => "invalid-edit",
            },
            SessionError::Graph(_) | SessionError::Link(_) | SessionError::CellUriInKnowledge(_) => {
                "invalid-parameter"
            }
            SessionError::Collect(CollectError::AlreadyCollected(_)) => "already-collected",
            SessionError::Collect(_) => "invalid-parameter",
            SessionError::StagingNotFound(_) => "staging-not-found",
            SessionError::CommitNotFound(_) => "commit-not-found",
            SessionError::StagingClosed { .. } => "staging-closed",
            SessionError::EditMismatch { .. } => "edit-mismatch",
            SessionError::InvalidEdit(_) => "invalid-edit",
            SessionError::AlreadyUndone(_) => "already-undone",
        }
    }

    /// Request field most likely at fault, if any.
    pub fn parameter(&self) -> Option<&'static str> {
        match self {
            SessionError::Workbook(_) => Some("workbook"),
            SessionError::Extract(e) => match e {
                ExtractError::EmptySelection | ExtractError::UnresolvableCell(_) => Some("selection"),
                ExtractError::InvalidPattern { .. } | ExtractError::MissingGroup { .. } => Some("pattern"),
                ExtractError::Transform(_) => Some("transform"),
                ExtractError::Graph(_) => Some("params"),
                ExtractError::UnknownPerson(_) => Some("person"),
                ExtractError::InvalidEdit(_) => Some("edit"),
            },
            SessionError::Graph(_) | SessionError::Link(_) | SessionError::CellUriInKnowledge(_) => Some("params"),
            SessionError::Collect(CollectError::AlreadyCollected(_)) => Some("rerun"),
            SessionError::Collect(_) => Some("config"),
            SessionError::StagingNotFound(_) | SessionError::StagingClosed { .. } => Some("staging_id"),
            SessionError::CommitNotFound(_) | SessionError::AlreadyUndone(_) => Some("commit_id"),
            SessionError::EditMismatch { .. } | SessionError::InvalidEdit(_) => Some("edit"),
        }
    }
}

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            fn nth(n: usize) -> Self {
                $name(format!(concat!($prefix, "{}"), n))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

id_type!(StagingId, "s");
id_type!(CommitId, "c");

/// One extraction to run, with everything needed to rerun it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtractorRequest {
    Stats { selection: Selection, params: StatsParams },
    Regex { selection: Selection, params: RegexParams },
    Date { selection: Selection, params: DateParams },
    Person { selection: Selection },
    Relationship { selection: Selection, params: RelationParams },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StagingPayload {
    Stats(StatSummary),
    Regex(RegexStaging),
    Date(DateStaging),
    Person(PersonIndex),
    Relationship(RelationshipStaging),
}

impl StagingPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            StagingPayload::Stats(_) => "stats",
            StagingPayload::Regex(_) => "regex",
            StagingPayload::Date(_) => "date",
            StagingPayload::Person(_) => "person",
            StagingPayload::Relationship(_) => "relationship",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum StagingStatus {
    Open,
    Committed { commit: CommitId },
}

impl StagingStatus {
    fn name(&self) -> &'static str {
        match self {
            StagingStatus::Open => "open",
            StagingStatus::Committed { .. } => "committed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Staging {
    pub id: StagingId,
    pub created_at: DateTime<Utc>,
    pub request: ExtractorRequest,
    pub payload: StagingPayload,
    pub status: StagingStatus,
}

/// A user adjustment of an open staging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum StagingEdit {
    /// Changes one value row of a statistics staging.
    StatsRow {
        value: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        create: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preferred_label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alt_labels: Option<Vec<String>>,
        /// An empty comment clears it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        comment: Option<String>,
    },
    /// Retargets a statistics staging to another class or predicate.
    StatsTarget {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<Resource>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        property: Option<Resource>,
    },
    Person { edit: PersonEdit },
    /// Drops everything the staging derived from one cell.
    ExcludeCell { cell: CellRef },
}

impl StagingEdit {
    fn name(&self) -> &'static str {
        match self {
            StagingEdit::StatsRow { .. } => "stats_row",
            StagingEdit::StatsTarget { .. } => "stats_target",
            StagingEdit::Person { .. } => "person",
            StagingEdit::ExcludeCell { .. } => "exclude_cell",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommitOrigin {
    Staging { staging: StagingId },
    Collect,
    Lift,
}

/// The triples a commit added to each graph, exactly as applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: CommitId,
    pub origin: CommitOrigin,
    pub matching: Vec<Triple>,
    pub knowledge: Vec<Triple>,
    /// Domain resources minted by this commit.
    pub minted: Vec<Resource>,
    pub delta: Delta,
    pub timestamp: DateTime<Utc>,
    pub undone: bool,
}

#[derive(Default)]
struct Applied {
    matching_added: Vec<Triple>,
    knowledge_added: Vec<Triple>,
    delta: Delta,
}

#[derive(Default)]
struct Change {
    matching_add: Vec<Triple>,
    knowledge_add: Vec<Triple>,
    matching_remove: Vec<Triple>,
    knowledge_remove: Vec<Triple>,
}

pub struct Session {
    workbook: Workbook,
    format: SourceFormat,
    config: ProjectConfig,
    linker: DeepLinker,
    minter: Minter,
    store: GraphStore,
    stagings: Vec<Staging>,
    commits: Vec<CommitRecord>,
    instances: BTreeMap<(String, u32), (Instance, CommitId)>,
    skipped: BTreeMap<(String, u32), (SkippedRow, CommitId)>,
    log: Vec<LogEntry>,
    staged: usize,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("workbook", &self.workbook.id)
            .field("stagings", &self.stagings.len())
            .field("commits", &self.commits.len())
            .finish()
    }
}

impl Session {
    pub fn open(bytes: &[u8], format: SourceFormat, config: ProjectConfig) -> Result<Self, SessionError> {
        let workbook = load_workbook(bytes, format)?;
        let mut linker = DeepLinker::new(&config.base_uri)?;
        linker.register(workbook.id.clone());
        let minter = Minter::new(&config.base_uri)?;
        let config = ProjectConfig {
            base_uri: minter.base().to_string(),
            ..config
        };
        let mut s = Session {
            workbook,
            format,
            config,
            linker,
            minter,
            store: GraphStore::default(),
            stagings: Vec::new(),
            commits: Vec::new(),
            instances: BTreeMap::new(),
            skipped: BTreeMap::new(),
            log: Vec::new(),
            staged: 0,
        };
        let header = LogOp::Open {
            schema: LOG_SCHEMA_VERSION,
            checksum: s.workbook.checksum.clone(),
            format,
            base_uri: s.config.base_uri.clone(),
            epoch: s.config.epoch,
        };
        s.log.push(LogEntry { op: header, delta: None });
        Ok(s)
    }

    pub fn workbook(&self) -> &Workbook {
        &self.workbook
    }

    pub fn format(&self) -> SourceFormat {
        self.format
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.config
    }

    pub fn linker(&self) -> &DeepLinker {
        &self.linker
    }

    pub fn minter(&self) -> &Minter {
        &self.minter
    }

    pub fn store(&self) -> &GraphStore {
        &self.store
    }

    pub fn graph(&self, name: GraphName) -> &Graph {
        self.store.graph(name)
    }

    pub fn stagings(&self) -> &[Staging] {
        &self.stagings
    }

    pub fn staging(&self, id: &StagingId) -> Result<&Staging, SessionError> {
        self.stagings
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| SessionError::StagingNotFound(id.0.clone()))
    }

    pub fn commits(&self) -> &[CommitRecord] {
        &self.commits
    }

    pub fn commit_record(&self, id: &CommitId) -> Result<&CommitRecord, SessionError> {
        self.commits
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| SessionError::CommitNotFound(id.0.clone()))
    }

    /// Collected instances ordered by sheet and row.
    pub fn instances(&self) -> Vec<&Instance> {
        self.instances.values().map(|(i, _)| i).collect()
    }

    /// Instances and skipped rows of all live collect commits.
    pub fn instance_report(&self) -> InstanceReport {
        InstanceReport {
            instances: self.instances.values().map(|(i, _)| i.clone()).collect(),
            skipped_rows: self.skipped.values().map(|(r, _)| r.clone()).collect(),
        }
    }

    pub fn log_entries(&self) -> &[LogEntry] {
        &self.log
    }

    /// The operation log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|e| e.to_line() + "\n")
            .collect()
    }

    pub fn export(&self, name: GraphName, format: RdfFormat) -> String {
        serialize(self.store.graph(name), format)
    }

    pub fn cell_resource(&self, cell: &CellRef) -> Result<Resource, SessionError> {
        Ok(Resource::new(self.linker.link(cell)?.into_string())?)
    }

    fn staging_mut(&mut self, id: &StagingId) -> Result<&mut Staging, SessionError> {
        self.stagings
            .iter_mut()
            .find(|s| &s.id == id)
            .ok_or_else(|| SessionError::StagingNotFound(id.0.clone()))
    }

    fn record(&mut self, op: LogOp, delta: Option<Delta>) {
        self.log.push(LogEntry { op, delta });
    }

    fn apply(&mut self, change: Change) -> Applied {
        let mut lines = Vec::new();
        let mut out = Applied::default();
        let delta = &mut out.delta;
        for t in change.matching_remove {
            if self.store.graph_mut(GraphName::Matching).remove(&t) {
                delta.matching_removed += 1;
                lines.push(format!("-m {}", ntriples_line(&t)));
            }
        }
        for t in change.knowledge_remove {
            if self.store.graph_mut(GraphName::Knowledge).remove(&t) {
                delta.knowledge_removed += 1;
                lines.push(format!("-k {}", ntriples_line(&t)));
            }
        }
        for t in change.matching_add {
            if self.store.add(GraphName::Matching, t.clone()) {
                delta.matching_added += 1;
                lines.push(format!("+m {}", ntriples_line(&t)));
                out.matching_added.push(t);
            }
        }
        for t in change.knowledge_add {
            if self.store.add(GraphName::Knowledge, t.clone()) {
                delta.knowledge_added += 1;
                lines.push(format!("+k {}", ntriples_line(&t)));
                out.knowledge_added.push(t);
            }
        }
        lines.sort();
        delta.digest = hex::encode(Sha256::digest(lines.concat().as_bytes()));
        out
    }

    /// Runs an extraction and keeps its result as a new open staging.
    pub fn stage(&mut self, mut request: ExtractorRequest) -> Result<&Staging, SessionError> {
        if let ExtractorRequest::Date { params, .. } = &mut request {
            params.epoch.get_or_insert(self.config.epoch);
        }
        let wb = &self.workbook;
        let payload = match &request {
            ExtractorRequest::Stats { selection, params } => {
                self.check_knowledge_term(&params.class)?;
                StagingPayload::Stats(descriptive_statistics(wb, selection, params)?)
            }
            ExtractorRequest::Regex { selection, params } => {
                StagingPayload::Regex(regex_extract(wb, selection, params)?)
            }
            ExtractorRequest::Date { selection, params } => {
                StagingPayload::Date(date_extract(wb, selection, params)?)
            }
            ExtractorRequest::Person { selection } => {
                StagingPayload::Person(person_extract(wb, selection, PersonIndex::new())?)
            }
            ExtractorRequest::Relationship { selection, params } => {
                StagingPayload::Relationship(relationship_discover(wb, selection, params)?)
            }
        };
        self.staged += 1;
        let id = StagingId::nth(self.staged);
        self.record(
            LogOp::Stage {
                staging: id.clone(),
                request: request.clone(),
            },
            None,
        );
        self.stagings.push(Staging {
            id,
            created_at: Utc::now(),
            request,
            payload,
            status: StagingStatus::Open,
        });
        Ok(self.stagings.last().expect("just pushed"))
    }

    fn check_knowledge_term(&self, r: &Resource) -> Result<(), SessionError> {
        if self.linker.is_cell_uri(r.as_str()) {
            Err(SessionError::CellUriInKnowledge(r.to_string()))
        } else {
            Ok(())
        }
    }

    fn open_staging(&mut self, id: &StagingId) -> Result<&mut Staging, SessionError> {
        let st = self.staging_mut(id)?;
        if st.status != StagingStatus::Open {
            return Err(SessionError::StagingClosed {
                id: id.0.clone(),
                status: st.status.name(),
            });
        }
        Ok(st)
    }

    pub fn edit(&mut self, id: &StagingId, edit: StagingEdit) -> Result<&Staging, SessionError> {
        if let StagingEdit::StatsTarget { class: Some(c), .. } = &edit {
            self.check_knowledge_term(c)?;
        }
        let wb = &self.workbook;
        let st = self
            .stagings
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| SessionError::StagingNotFound(id.0.clone()))?;
        if st.status != StagingStatus::Open {
            return Err(SessionError::StagingClosed {
                id: id.0.clone(),
                status: st.status.name(),
            });
        }
        let payload = edited_payload(wb, &st.payload, &edit)?;
        self.open_staging(id)?.payload = payload;
        self.record(
            LogOp::Edit {
                staging: id.clone(),
                edit,
            },
            None,
        );
        self.staging(id)
    }

    /// Drops an open staging; its id is unknown afterwards.
    pub fn discard(&mut self, id: &StagingId) -> Result<(), SessionError> {
        self.open_staging(id)?;
        self.stagings.retain(|s| &s.id != id);
        self.record(LogOp::Discard { staging: id.clone() }, None);
        Ok(())
    }

    /// Writes a staging into the graphs. Committing an already committed
    /// staging returns the original record and changes nothing.
    pub fn commit(&mut self, id: &StagingId) -> Result<CommitRecord, SessionError> {
        let st = self.staging(id)?;
        match &st.status {
            StagingStatus::Committed { commit } => return Ok(self.commit_record(commit)?.clone()),
            StagingStatus::Open => {}
        }
        let (matching, knowledge, minted) = self.materialize(st)?;
        for t in &knowledge {
            self.check_knowledge_term(&t.subject)?;
            if let Some(r) = t.object.as_resource() {
                self.check_knowledge_term(r)?;
            }
        }
        let commit = CommitId::nth(self.commits.len() + 1);
        let applied = self.apply(Change {
            matching_add: matching,
            knowledge_add: knowledge,
            ..Change::default()
        });
        let delta = applied.delta.clone();
        let record = CommitRecord {
            id: commit.clone(),
            origin: CommitOrigin::Staging { staging: id.clone() },
            matching: applied.matching_added,
            knowledge: applied.knowledge_added,
            minted,
            delta: applied.delta,
            timestamp: Utc::now(),
            undone: false,
        };
        self.commits.push(record.clone());
        self.staging_mut(id)?.status = StagingStatus::Committed { commit: commit.clone() };
        self.record(
            LogOp::Commit {
                staging: id.clone(),
                commit,
            },
            Some(delta),
        );
        Ok(record)
    }

    /// Matching-graph and knowledge-graph triples a payload commits to.
    fn materialize(&self, st: &Staging) -> Result<(Vec<Triple>, Vec<Triple>, Vec<Resource>), SessionError> {
        let mut m = Vec::new();
        let mut k = Vec::new();
        let mut minted = Vec::new();
        match &st.payload {
            StagingPayload::Stats(s) => {
                let kind = s.class.local_name();
                for row in s.rows.iter().filter(|r| r.create) {
                    let r = self.minter.resource(&kind, &row.preferred_label)?;
                    k.push(Triple::new(r.clone(), Vocabulary::rdf_type(), s.class.clone()));
                    k.push(Triple::new(
                        r.clone(),
                        Vocabulary::pref_label(),
                        Literal::string(row.preferred_label.trim()),
                    ));
                    for alt in &row.alt_labels {
                        k.push(Triple::new(r.clone(), Vocabulary::alt_label(), Literal::string(alt)));
                    }
                    if let Some(c) = &row.comment {
                        k.push(Triple::new(r.clone(), Vocabulary::comment(), Literal::string(c)));
                    }
                    for occ in &row.occurrences {
                        m.push(Triple::new(
                            self.cell_resource(&occ.cell)?,
                            Vocabulary::routed(&s.property, occ.struck),
                            r.clone(),
                        ));
                    }
                    minted.push(r);
                }
            }
            StagingPayload::Regex(s) => {
                let ExtractorRequest::Regex { params, .. } = &st.request else {
                    unreachable!("regex payload comes from a regex request")
                };
                for hit in &s.matched {
                    let cell = self.cell_resource(&hit.cell)?;
                    m.push(Triple::new(cell.clone(), Vocabulary::routed(&params.property, hit.struck), hit.value.clone()));
                    if let (Some(rem), Some(rp)) = (&hit.remainder, &params.remainder_property) {
                        m.push(Triple::new(cell, Vocabulary::routed(rp, hit.remainder_struck), Literal::string(rem)));
                    }
                }
            }
            StagingPayload::Date(s) => {
                let ExtractorRequest::Date { params, .. } = &st.request else {
                    unreachable!("date payload comes from a date request")
                };
                let property = &params.property;
                for hit in &s.hits {
                    m.push(Triple::new(
                        self.cell_resource(&hit.cell)?,
                        Vocabulary::routed(property, hit.struck),
                        Literal::date(hit.date),
                    ));
                }
            }
            StagingPayload::Person(ix) => {
                let class = self.minter.class("Person")?;
                for p in &ix.persons {
                    let r = self.minter.resource("Person", &p.display_name())?;
                    k.push(Triple::new(r.clone(), Vocabulary::rdf_type(), class.clone()));
                    k.push(Triple::new(r.clone(), Vocabulary::pref_label(), Literal::string(p.display_name())));
                    k.push(Triple::new(r.clone(), Vocabulary::last_name(), Literal::string(&p.last_name)));
                    if let Some(f) = &p.first_name {
                        k.push(Triple::new(r.clone(), Vocabulary::first_name(), Literal::string(f)));
                    }
                    for mention in &p.mentions {
                        let cell = self.cell_resource(&mention.cell)?;
                        m.push(Triple::new(
                            cell.clone(),
                            Vocabulary::routed(&Vocabulary::mentions_person(), mention.struck),
                            r.clone(),
                        ));
                        if let Some(c) = &mention.comment {
                            m.push(Triple::new(
                                cell,
                                Vocabulary::routed(&Vocabulary::remainder_comment(), mention.struck),
                                Literal::string(c),
                            ));
                        }
                    }
                    minted.push(r);
                }
            }
            StagingPayload::Relationship(s) => {
                let ExtractorRequest::Relationship { params, .. } = &st.request else {
                    unreachable!("relationship payload comes from a relationship request")
                };
                let predicate = Vocabulary::related_cell_via(&params.predicate);
                for RelationPair { a, b, .. } in &s.pairs {
                    m.push(Triple::new(self.cell_resource(a)?, predicate.clone(), self.cell_resource(b)?));
                }
            }
        }
        Ok((m, k, minted))
    }

    /// Deletes annotations of the selected cells, optionally only those of
    /// one predicate (both its normal and struck form).
    pub fn remove_annotations(
        &mut self,
        selection: &Selection,
        predicate: Option<&Resource>,
    ) -> Result<Delta, SessionError> {
        let wanted = predicate.map(|p| {
            let normal = Vocabulary::normal_variant(p);
            [Vocabulary::struck_variant(&normal), normal]
        });
        let mut remove = Vec::new();
        for cell in &selection.cells {
            let subject = self.cell_resource(cell)?;
            let pattern = Pattern::any().subject(subject);
            remove.extend(
                self.graph(GraphName::Matching)
                    .matching(&pattern)
                    .filter(|t| wanted.as_ref().is_none_or(|w| w.contains(&t.predicate)))
                    .cloned(),
            );
        }
        let delta = self
            .apply(Change {
                matching_remove: remove,
                ..Change::default()
            })
            .delta;
        self.record(
            LogOp::RemoveAnnotations {
                selection: selection.clone(),
                predicate: predicate.cloned(),
            },
            Some(delta.clone()),
        );
        Ok(delta)
    }

    /// Retracts the triples a commit added. The staging of an undone
    /// staging commit is open again.
    pub fn undo(&mut self, id: &CommitId) -> Result<Delta, SessionError> {
        let idx = self
            .commits
            .iter()
            .position(|c| &c.id == id)
            .ok_or_else(|| SessionError::CommitNotFound(id.0.clone()))?;
        if self.commits[idx].undone {
            return Err(SessionError::AlreadyUndone(id.0.clone()));
        }
        let target = &self.commits[idx];
        let change = Change {
            matching_remove: target.matching.clone(),
            knowledge_remove: target.knowledge.clone(),
            ..Change::default()
        };
        let origin = target.origin.clone();
        let delta = self.apply(change).delta;
        self.commits[idx].undone = true;
        match origin {
            CommitOrigin::Staging { staging } => self.staging_mut(&staging)?.status = StagingStatus::Open,
            CommitOrigin::Collect => {
                self.instances.retain(|_, (_, c)| c != id);
                self.skipped.retain(|_, (_, c)| c != id);
            }
            CommitOrigin::Lift => {}
        }
        self.record(LogOp::Undo { commit: id.clone() }, Some(delta.clone()));
        Ok(delta)
    }

    /// Builds instances for a row range and adds them to the knowledge graph.
    pub fn collect(&mut self, config: CollectorConfig) -> Result<(CollectReport, CommitId), SessionError> {
        self.check_knowledge_term(&config.default_type)?;
        let overlap: Vec<(String, u32)> = self
            .instances
            .keys()
            .filter(|(s, r)| *s == config.sheet && (config.first_row..=config.last_row).contains(r))
            .cloned()
            .collect();
        if !overlap.is_empty() && !config.rerun {
            return Err(CollectError::AlreadyCollected(overlap.iter().map(|(_, r)| *r).collect()).into());
        }
        let report = collect_instances(self.graph(GraphName::Matching), &self.linker, &self.minter, &config)?;
        for t in &report.triples {
            if let Some(r) = t.object.as_resource() {
                self.check_knowledge_term(r)?;
            }
        }
        // Replaced instances lose every triple mentioning them.
        let retired: BTreeSet<Resource> = overlap
            .iter()
            .filter_map(|k| self.instances.remove(k))
            .map(|(i, _)| i.iri)
            .collect();
        let mentions = |t: &Triple| {
            retired.contains(&t.subject) || t.object.as_resource().is_some_and(|o| retired.contains(o))
        };
        let knowledge_remove: Vec<Triple> = self.graph(GraphName::Knowledge).iter().filter(|t| mentions(t)).cloned().collect();
        for c in &mut self.commits {
            c.knowledge.retain(|t| !mentions(t));
        }
        let commit = CommitId::nth(self.commits.len() + 1);
        let applied = self.apply(Change {
            knowledge_add: report.triples.clone(),
            knowledge_remove,
            ..Change::default()
        });
        let delta = applied.delta.clone();
        for inst in &report.instances {
            self.instances
                .insert((inst.sheet.clone(), inst.row), (inst.clone(), commit.clone()));
        }
        self.skipped
            .retain(|(s, r), _| *s != config.sheet || !(config.first_row..=config.last_row).contains(r));
        for row in &report.skipped_rows {
            self.skipped
                .insert((config.sheet.clone(), row.row), (row.clone(), commit.clone()));
        }
        self.commits.push(CommitRecord {
            id: commit.clone(),
            origin: CommitOrigin::Collect,
            matching: Vec::new(),
            knowledge: applied.knowledge_added,
            minted: report.instances.iter().map(|i| i.iri.clone()).collect(),
            delta: applied.delta,
            timestamp: Utc::now(),
            undone: false,
        });
        self.record(
            LogOp::Collect {
                config,
                commit: commit.clone(),
            },
            Some(delta),
        );
        Ok((report, commit))
    }

    /// Lifts cell relations between collected rows to instance triples.
    pub fn lift(&mut self, predicate: Option<&Resource>) -> Result<(LiftReport, CommitId), SessionError> {
        let instances = &self.instances;
        let report = lift_relationships(
            self.store.graph(GraphName::Matching),
            &self.linker,
            |c: &CellRef| instances.get(&(c.sheet.clone(), c.row)).map(|(i, _)| i.iri.clone()),
            predicate,
        );
        let commit = CommitId::nth(self.commits.len() + 1);
        let applied = self.apply(Change {
            knowledge_add: report.added.clone(),
            ..Change::default()
        });
        let delta = applied.delta.clone();
        self.commits.push(CommitRecord {
            id: commit.clone(),
            origin: CommitOrigin::Lift,
            matching: Vec::new(),
            knowledge: applied.knowledge_added,
            minted: Vec::new(),
            delta: applied.delta,
            timestamp: Utc::now(),
            undone: false,
        });
        self.record(
            LogOp::Lift {
                predicate: predicate.cloned(),
                commit: commit.clone(),
            },
            Some(delta),
        );
        Ok((report, commit))
    }

    /// Annotations of the selected cells plus the knowledge-graph
    /// description of every resource they point to.
    pub fn inspect(&self, selection: &Selection) -> Result<Graph, SessionError> {
        let mut out = Graph::new();
        let knowledge = self.graph(GraphName::Knowledge);
        for cell in &selection.cells {
            let subject = self.cell_resource(cell)?;
            let pattern = Pattern::any().subject(subject);
            for t in self.graph(GraphName::Matching).matching(&pattern) {
                out.add(t.clone());
                if let Term::Resource { iri } = &t.object {
                    if !self.linker.is_cell_uri(iri.as_str()) {
                        let about = Pattern::any().subject(iri.clone());
                        out.extend(knowledge.matching(&about).cloned());
                    }
                }
            }
        }
        Ok(out)
    }

    /// [`Session::inspect`] serialized as shown to the user.
    pub fn inspection(&self, selection: &Selection, format: RdfFormat) -> Result<String, SessionError> {
        Ok(serialize(&self.inspect(selection)?, format))
    }

    /// Resources minted by live commits that no cell refers to any more.
    pub fn orphans(&self) -> Vec<Resource> {
        let referenced: HashSet<&Resource> = self
            .graph(GraphName::Matching)
            .iter()
            .filter_map(|t| t.object.as_resource())
            .collect();
        let knowledge = self.graph(GraphName::Knowledge);
        let mut out = BTreeSet::new();
        for c in self.commits.iter().filter(|c| !c.undone && matches!(c.origin, CommitOrigin::Staging { .. })) {
            for r in &c.minted {
                let described = knowledge.matching(&Pattern::any().subject(r.clone())).next().is_some();
                if described && !referenced.contains(r) {
                    out.insert(r.clone());
                }
            }
        }
        out.into_iter().collect()
    }
}

fn edited_payload(wb: &Workbook, payload: &StagingPayload, edit: &StagingEdit) -> Result<StagingPayload, SessionError> {
    let mismatch = || SessionError::EditMismatch {
        edit: edit.name(),
        kind: payload.kind(),
    };
    let mut p = payload.clone();
    match (edit, &mut p) {
        (
            StagingEdit::StatsRow {
                value,
                create,
                preferred_label,
                alt_labels,
                comment,
            },
            StagingPayload::Stats(s),
        ) => {
            let row = s
                .rows
                .iter_mut()
                .find(|r| &r.value == value)
                .ok_or_else(|| SessionError::InvalidEdit(format!("no value row `{value}`")))?;
            if let Some(c) = create {
                row.create = *c;
            }
            if let Some(l) = preferred_label {
                if l.trim().is_empty() {
                    return Err(SessionError::InvalidEdit("preferred label must not be empty".into()));
                }
                row.preferred_label = l.trim().to_string();
            }
            if let Some(a) = alt_labels {
                row.alt_labels = a.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            }
            if let Some(c) = comment {
                row.comment = (!c.trim().is_empty()).then(|| c.trim().to_string());
            }
        }
        (StagingEdit::StatsTarget { class, property }, StagingPayload::Stats(s)) => {
            if let Some(c) = class {
                s.class = c.clone();
            }
            if let Some(pr) = property {
                s.property = pr.clone();
            }
        }
        (StagingEdit::Person { edit }, StagingPayload::Person(ix)) => {
            *ix = apply_person_edit(wb, ix, edit)?;
        }
        (StagingEdit::ExcludeCell { cell }, payload) => match payload {
            StagingPayload::Stats(s) => {
                for row in &mut s.rows {
                    row.occurrences.retain(|o| &o.cell != cell);
                    row.count = row.occurrences.len();
                }
                s.rows.retain(|r| r.count > 0);
            }
            StagingPayload::Regex(s) => s.matched.retain(|m| &m.cell != cell),
            StagingPayload::Date(s) => s.hits.retain(|h| &h.cell != cell),
            StagingPayload::Person(ix) => {
                for person in &mut ix.persons {
                    person.mentions.retain(|m| &m.cell != cell);
                }
                ix.persons.retain(|p| !p.mentions.is_empty());
            }
            StagingPayload::Relationship(s) => s.pairs.retain(|pr| &pr.a != cell && &pr.b != cell),
        },
        _ => return Err(mismatch()),
    }
    Ok(p)
}

/// Regex constant-mode requests that tag a cell with a class.
pub fn type_hint_request(selection: Selection, pattern: &str, class: Resource) -> ExtractorRequest {
    ExtractorRequest::Regex {
        selection,
        params: RegexParams {
            pattern: pattern.to_string(),
            mode: RegexMode::Constant { resource: class },
            property: Vocabulary::type_hint(),
            remainder_property: None,
        },
    }
}
