//! Project registry with optional on-disk persistence.
//!
//! A persisted project is a directory holding `project.json`, the uploaded
//! workbook and `session.log.jsonl`; projects are rebuilt by replay on start.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sheetkg_core::session::{replay, ProjectConfig, Session};
use sheetkg_core::workbook::SourceFormat;
use tokio::sync::RwLock;

use crate::error::ApiError;

const MANIFEST: &str = "project.json";
const LOG: &str = "session.log.jsonl";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    id: String,
    name: String,
    format: SourceFormat,
    created_at: DateTime<Utc>,
}

pub struct Project {
    pub id: String,
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub session: Session,
    dir: Option<PathBuf>,
    persisted_entries: usize,
}

fn workbook_file(format: SourceFormat) -> String {
    format!("workbook.{}", format.as_str())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

impl Project {
    /// Writes the log when operations were added since the last write.
    pub fn persist(&mut self) -> Result<(), ApiError> {
        let entries = self.session.log_entries().len();
        if entries == self.persisted_entries {
            return Ok(());
        }
        if let Some(dir) = &self.dir {
            write_atomic(&dir.join(LOG), self.session.log_jsonl().as_bytes())
                .map_err(|e| ApiError::internal(format!("cannot persist project {}: {e}", self.id)))?;
        }
        self.persisted_entries = entries;
        Ok(())
    }
}

pub type ProjectHandle = Arc<RwLock<Project>>;

pub struct Registry {
    projects: RwLock<BTreeMap<String, ProjectHandle>>,
    storage: Option<PathBuf>,
}

impl Registry {
    pub fn in_memory() -> Self {
        Registry {
            projects: RwLock::new(BTreeMap::new()),
            storage: None,
        }
    }

    /// Opens `dir`, replaying every stored project. Projects that fail to
    /// replay are skipped with a warning.
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut projects = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if !path.join(MANIFEST).is_file() {
                continue;
            }
            match load(&path) {
                Ok(p) => {
                    projects.insert(p.id.clone(), Arc::new(RwLock::new(p)));
                }
                Err(e) => tracing::warn!("skipping project {}: {e}", path.display()),
            }
        }
        Ok(Registry {
            projects: RwLock::new(projects),
            storage: Some(dir.to_path_buf()),
        })
    }

    pub async fn create(
        &self,
        name: String,
        bytes: &[u8],
        format: SourceFormat,
        config: ProjectConfig,
    ) -> Result<ProjectHandle, ApiError> {
        let session = Session::open(bytes, format, config)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created_at = Utc::now();
        let dir = match &self.storage {
            Some(root) => {
                let dir = root.join(&id);
                let manifest = Manifest {
                    id: id.clone(),
                    name: name.clone(),
                    format,
                    created_at,
                };
                let io = |e: std::io::Error| ApiError::internal(format!("cannot store project: {e}"));
                std::fs::create_dir_all(&dir).map_err(io)?;
                std::fs::write(dir.join(workbook_file(format)), bytes).map_err(io)?;
                let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
                write_atomic(&dir.join(MANIFEST), &json).map_err(io)?;
                Some(dir)
            }
            None => None,
        };
        let mut project = Project {
            id: id.clone(),
            name,
            created_at,
            session,
            dir,
            persisted_entries: 0,
        };
        project.persist()?;
        let handle = Arc::new(RwLock::new(project));
        self.projects.write().await.insert(id, handle.clone());
        Ok(handle)
    }

    pub async fn get(&self, id: &str) -> Result<ProjectHandle, ApiError> {
        self.projects
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("project-not-found", format!("project {id} not found"), "project_id"))
    }

    pub async fn all(&self) -> Vec<ProjectHandle> {
        self.projects.read().await.values().cloned().collect()
    }

    pub async fn delete(&self, id: &str) -> Result<(), ApiError> {
        let removed = self.projects.write().await.remove(id);
        let Some(handle) = removed else {
            return Err(ApiError::not_found("project-not-found", format!("project {id} not found"), "project_id"));
        };
        if let Some(dir) = &handle.read().await.dir {
            std::fs::remove_dir_all(dir).map_err(|e| ApiError::internal(format!("cannot delete project: {e}")))?;
        }
        Ok(())
    }
}

fn load(dir: &Path) -> Result<Project, String> {
    let manifest: Manifest = serde_json::from_slice(&std::fs::read(dir.join(MANIFEST)).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let bytes = std::fs::read(dir.join(workbook_file(manifest.format))).map_err(|e| e.to_string())?;
    let log = std::fs::read_to_string(dir.join(LOG)).unwrap_or_default();
    let session = replay(&bytes, &log).map_err(|e| e.to_string())?;
    Ok(Project {
        id: manifest.id,
        name: manifest.name,
        created_at: manifest.created_at,
        persisted_entries: session.log_entries().len(),
        session,
        dir: Some(dir.to_path_buf()),
    })
}
