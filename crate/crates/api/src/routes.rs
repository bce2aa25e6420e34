//! Route handlers. Each one parses its input, calls the engine and encodes
//! the result; no domain logic lives here.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::{DateTime, NaiveDate, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sheetkg_core::collector::{CollectReport, CollectorConfig, InstanceReport, LiftReport};
use sheetkg_core::extract::Selection;
use sheetkg_core::graph::{GraphName, Pattern, RdfFormat, Resource};
use sheetkg_core::session::{CommitId, CommitRecord, Delta, ExtractorRequest, Session, SessionError, StagingEdit, StagingId};
use sheetkg_core::workbook::{workbook_stats, CellValue, SheetStats, SourceFormat, TextRun};

use crate::error::ApiError;
use crate::store::{Project, ProjectHandle};
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;

/// Largest number of cells one window request may span.
pub const MAX_WINDOW_CELLS: u64 = 20_000;

fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request("invalid-body", e.to_string(), "body"))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::bad_request("invalid-query", e.body_text(), "query"))
}

fn rdf_format(s: Option<&str>) -> ApiResult<RdfFormat> {
    s.unwrap_or("turtle")
        .parse()
        .map_err(|e: sheetkg_core::graph::GraphError| ApiError::bad_request("invalid-parameter", e.to_string(), "format"))
}

fn rdf_response(text: String, format: RdfFormat, download: Option<String>) -> Response {
    let mut res = ([(header::CONTENT_TYPE, format.media_type())], text).into_response();
    if let Some(name) = download {
        let value = format!("attachment; filename=\"{name}\"");
        res.headers_mut()
            .insert(header::CONTENT_DISPOSITION, value.parse().expect("ascii header"));
    }
    res
}

async fn project(state: &AppState, id: &str) -> ApiResult<ProjectHandle> {
    state.registry.get(id).await
}

/// Runs `f` under the project's write lock and persists the log.
async fn mutate<T>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session) -> Result<T, SessionError>,
) -> ApiResult<T> {
    let handle = project(state, id).await?;
    let mut p = handle.write().await;
    let out = f(&mut p.session)?;
    p.persist()?;
    Ok(out)
}

async fn read<T>(state: &AppState, id: &str, f: impl FnOnce(&Project) -> ApiResult<T>) -> ApiResult<T> {
    let handle = project(state, id).await?;
    let p = handle.read().await;
    f(&p)
}

pub async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProjectInfo {
    pub project_id: String,
    pub name: String,
    pub format: SourceFormat,
    pub checksum: String,
    pub workbook_id: String,
    pub base_uri: String,
    pub epoch: NaiveDate,
    pub created_at: DateTime<Utc>,
    pub sheets: Vec<SheetStats>,
    pub stagings: usize,
    pub commits: usize,
}

fn info(p: &Project) -> ProjectInfo {
    let s = &p.session;
    ProjectInfo {
        project_id: p.id.clone(),
        name: p.name.clone(),
        format: s.format(),
        checksum: s.workbook().checksum.clone(),
        workbook_id: s.workbook().id.as_str().to_string(),
        base_uri: s.config().base_uri.clone(),
        epoch: s.config().epoch,
        created_at: p.created_at,
        sheets: workbook_stats(s.workbook(), 0).sheets,
        stagings: s.stagings().len(),
        commits: s.commits().len(),
    }
}

pub async fn list_projects(State(state): State<Arc<AppState>>) -> Json<Vec<ProjectInfo>> {
    let mut out = Vec::new();
    for handle in state.registry.all().await {
        out.push(info(&*handle.read().await));
    }
    Json(out)
}

#[derive(Debug, Default, Deserialize)]
pub struct CreateQuery {
    name: Option<String>,
    format: Option<String>,
    base_uri: Option<String>,
    epoch: Option<NaiveDate>,
}

pub async fn create_project(
    State(state): State<Arc<AppState>>,
    q: Result<Query<CreateQuery>, QueryRejection>,
    bytes: Bytes,
) -> ApiResult<(StatusCode, Json<ProjectInfo>)> {
    let q = query(q)?;
    let format = match q.format.as_deref() {
        Some(f) => f
            .parse()
            .map_err(|e: sheetkg_core::workbook::WorkbookError| ApiError::bad_request("invalid-parameter", e.to_string(), "format"))?,
        None => SourceFormat::sniff(&bytes),
    };
    let mut config = state.config.project();
    if let Some(b) = q.base_uri {
        config.base_uri = b;
    }
    if let Some(e) = q.epoch {
        config.epoch = e;
    }
    let name = q.name.unwrap_or_else(|| "workbook".into());
    let handle = state.registry.create(name, &bytes, format, config).await?;
    let p = handle.read().await;
    Ok((StatusCode::CREATED, Json(info(&p))))
}

pub async fn get_project(State(state): State<Arc<AppState>>, Path(pid): Path<String>) -> ApiResult<Json<ProjectInfo>> {
    read(&state, &pid, |p| Ok(Json(info(p)))).await
}

pub async fn delete_project(State(state): State<Arc<AppState>>, Path(pid): Path<String>) -> ApiResult<StatusCode> {
    state.registry.delete(&pid).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
pub struct WindowQuery {
    #[serde(default)]
    row: u32,
    #[serde(default)]
    col: u32,
    #[serde(default = "default_rows")]
    rows: u32,
    #[serde(default = "default_cols")]
    cols: u32,
}

fn default_rows() -> u32 {
    100
}

fn default_cols() -> u32 {
    26
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WindowCell {
    pub row: u32,
    pub col: u32,
    pub address: String,
    pub uri: String,
    pub value: CellValue,
    pub runs: Vec<TextRun>,
    /// Matching-graph statements about this cell.
    pub badges: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Window {
    pub sheet: String,
    pub row: u32,
    pub col: u32,
    pub rows: u32,
    pub cols: u32,
    /// Used range of the whole sheet.
    pub extent: (u32, u32),
    pub cells: Vec<WindowCell>,
}

pub async fn sheet_window(
    State(state): State<Arc<AppState>>,
    Path((pid, sheet)): Path<(String, String)>,
    q: Result<Query<WindowQuery>, QueryRejection>,
) -> ApiResult<Json<Window>> {
    let q = query(q)?;
    if u64::from(q.rows) * u64::from(q.cols) > MAX_WINDOW_CELLS {
        return Err(ApiError::bad_request(
            "window-too-large",
            format!("a window may span at most {MAX_WINDOW_CELLS} cells"),
            "rows",
        ));
    }
    read(&state, &pid, |p| {
        let s = &p.session;
        let sh = s
            .workbook()
            .sheet(&sheet)
            .ok_or_else(|| ApiError::not_found("sheet-not-found", format!("sheet {sheet:?} not found"), "sheet"))?;
        let matching = s.graph(GraphName::Matching);
        let rows = q.row..q.row.saturating_add(q.rows);
        let cols = q.col..q.col.saturating_add(q.cols);
        let mut cells = Vec::new();
        for r in rows {
            for cell in sh.row_cells(r).filter(|c| cols.contains(&c.cell_ref.col)) {
                let uri = s.cell_resource(&cell.cell_ref)?;
                cells.push(WindowCell {
                    row: cell.cell_ref.row,
                    col: cell.cell_ref.col,
                    address: cell.cell_ref.a1(),
                    badges: matching.count(&Pattern::any().subject(uri.clone())),
                    uri: uri.as_str().to_string(),
                    value: cell.value.clone(),
                    runs: cell.effective_runs(),
                });
            }
        }
        Ok(Json(Window {
            sheet: sheet.clone(),
            row: q.row,
            col: q.col,
            rows: q.rows,
            cols: q.cols,
            extent: sh.extent(),
            cells,
        }))
    })
    .await
}

pub async fn list_stagings(State(state): State<Arc<AppState>>, Path(pid): Path<String>) -> ApiResult<Response> {
    read(&state, &pid, |p| Ok(Json(p.session.stagings()).into_response())).await
}

pub async fn run_extractor(
    State(state): State<Arc<AppState>>,
    Path(pid): Path<String>,
    bytes: Bytes,
) -> ApiResult<Response> {
    let request: ExtractorRequest = body(&bytes)?;
    let staging = mutate(&state, &pid, |s| s.stage(request).cloned()).await?;
    Ok((StatusCode::CREATED, Json(staging)).into_response())
}

pub async fn get_staging(
    State(state): State<Arc<AppState>>,
    Path((pid, sid)): Path<(String, String)>,
) -> ApiResult<Response> {
    read(&state, &pid, |p| Ok(Json(p.session.staging(&StagingId(sid))?).into_response())).await
}

pub async fn edit_staging(
    State(state): State<Arc<AppState>>,
    Path((pid, sid)): Path<(String, String)>,
    bytes: Bytes,
) -> ApiResult<Response> {
    let edit: StagingEdit = body(&bytes)?;
    let staging = mutate(&state, &pid, |s| s.edit(&StagingId(sid), edit).cloned()).await?;
    Ok(Json(staging).into_response())
}

pub async fn commit_staging(
    State(state): State<Arc<AppState>>,
    Path((pid, sid)): Path<(String, String)>,
) -> ApiResult<Json<CommitRecord>> {
    mutate(&state, &pid, |s| s.commit(&StagingId(sid))).await.map(Json)
}

pub async fn discard_staging(
    State(state): State<Arc<AppState>>,
    Path((pid, sid)): Path<(String, String)>,
) -> ApiResult<Json<serde_json::Value>> {
    let id = StagingId(sid);
    mutate(&state, &pid, |s| s.discard(&id)).await?;
    Ok(Json(serde_json::json!({ "discarded": id })))
}

pub async fn list_commits(State(state): State<Arc<AppState>>, Path(pid): Path<String>) -> ApiResult<Response> {
    read(&state, &pid, |p| Ok(Json(p.session.commits()).into_response())).await
}

pub async fn get_commit(
    State(state): State<Arc<AppState>>,
    Path((pid, cid)): Path<(String, String)>,
) -> ApiResult<Response> {
    read(&state, &pid, |p| Ok(Json(p.session.commit_record(&CommitId(cid))?).into_response())).await
}

pub async fn undo_commit(
    State(state): State<Arc<AppState>>,
    Path((pid, cid)): Path<(String, String)>,
) -> ApiResult<Json<Delta>> {
    mutate(&state, &pid, |s| s.undo(&CommitId(cid))).await.map(Json)
}

#[derive(Debug, Deserialize)]
pub struct InspectBody {
    selection: Selection,
}

#[derive(Debug, Deserialize)]
pub struct FormatQuery {
    format: Option<String>,
}

pub async fn inspect(
    State(state): State<Arc<AppState>>,
    Path(pid): Path<String>,
    q: Result<Query<FormatQuery>, QueryRejection>,
    bytes: Bytes,
) -> ApiResult<Response> {
    let format = rdf_format(query(q)?.format.as_deref())?;
    let req: InspectBody = body(&bytes)?;
    read(&state, &pid, |p| {
        let text = p.session.inspection(&req.selection, format)?;
        Ok(rdf_response(text, format, None))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct RemoveBody {
    selection: Selection,
    #[serde(default)]
    predicate: Option<Resource>,
}

pub async fn remove_annotations(
    State(state): State<Arc<AppState>>,
    Path(pid): Path<String>,
    bytes: Bytes,
) -> ApiResult<Json<Delta>> {
    let req: RemoveBody = body(&bytes)?;
    mutate(&state, &pid, |s| s.remove_annotations(&req.selection, req.predicate.as_ref()))
        .await
        .map(Json)
}

pub async fn orphans(State(state): State<Arc<AppState>>, Path(pid): Path<String>) -> ApiResult<Json<Vec<Resource>>> {
    read(&state, &pid, |p| Ok(Json(p.session.orphans()))).await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CollectResponse {
    pub report: CollectReport,
    pub commit: CommitId,
}

pub async fn collect(
    State(state): State<Arc<AppState>>,
    Path(pid): Path<String>,
    bytes: Bytes,
) -> ApiResult<Json<CollectResponse>> {
    let config: CollectorConfig = body(&bytes)?;
    let (report, commit) = mutate(&state, &pid, |s| s.collect(config)).await?;
    Ok(Json(CollectResponse { report, commit }))
}

#[derive(Debug, Default, Deserialize)]
pub struct LiftBody {
    #[serde(default)]
    predicate: Option<Resource>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LiftResponse {
    pub report: LiftReport,
    pub commit: CommitId,
}

pub async fn lift(State(state): State<Arc<AppState>>, Path(pid): Path<String>, bytes: Bytes) -> ApiResult<Json<LiftResponse>> {
    let req: LiftBody = if bytes.is_empty() { LiftBody::default() } else { body(&bytes)? };
    let (report, commit) = mutate(&state, &pid, |s| s.lift(req.predicate.as_ref())).await?;
    Ok(Json(LiftResponse { report, commit }))
}

pub async fn instances(State(state): State<Arc<AppState>>, Path(pid): Path<String>) -> ApiResult<Json<InstanceReport>> {
    read(&state, &pid, |p| Ok(Json(p.session.instance_report()))).await
}

pub async fn export_graph(
    State(state): State<Arc<AppState>>,
    Path((pid, graph)): Path<(String, String)>,
    q: Result<Query<FormatQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let format = rdf_format(query(q)?.format.as_deref())?;
    let name: GraphName = graph
        .parse()
        .map_err(|e: sheetkg_core::graph::GraphError| ApiError::not_found("graph-not-found", e.to_string(), "graph"))?;
    read(&state, &pid, |p| {
        let text = p.session.export(name, format);
        let file = format!("{}.{}", name.as_str(), format.extension());
        Ok(rdf_response(text, format, Some(file)))
    })
    .await
}

pub async fn download_log(State(state): State<Arc<AppState>>, Path(pid): Path<String>) -> ApiResult<Response> {
    read(&state, &pid, |p| {
        Ok((
            [
                (header::CONTENT_TYPE, "application/x-ndjson"),
                (header::CONTENT_DISPOSITION, "attachment; filename=\"session.log.jsonl\""),
            ],
            p.session.log_jsonl(),
        )
            .into_response())
    })
    .await
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("route-not-found", "no such route", "path")
}
