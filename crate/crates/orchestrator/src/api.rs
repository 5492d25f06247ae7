//! HTTP/JSON service: scene sessions and the judging study.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use majutsu_core::edit::{parse_command, EditCommand, EditError};
use majutsu_core::scene::{export_gltf, load_document, load_document_from_path, save_document, SceneError};
use majutsu_eval::rank::{read_records_jsonl, write_records_jsonl};
use majutsu_eval::{ComparisonRecord, Dimension, EvalError, Study, StudyConfig};
use majutsu_providers::Libraries;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{AssetSource, PipelineConfig};
use crate::pipeline::build_scene;
use crate::session::{Mutation, Session, SessionError, SessionStore};

/// Default and maximum wait of a long-poll events request.
pub const DEFAULT_POLL_MS: u64 = 25_000;
pub const MAX_POLL_MS: u64 = 120_000;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> Self {
        let (status, code) = match e {
            EditError::UnknownInstance { .. } => (StatusCode::NOT_FOUND, "unknown_instance"),
            EditError::UnknownMaterial { .. } => (StatusCode::NOT_FOUND, "unknown_material"),
            EditError::UnknownAsset { .. } => (StatusCode::NOT_FOUND, "unknown_asset"),
            EditError::NothingToUndo => (StatusCode::CONFLICT, "nothing_to_undo"),
            EditError::NothingToRedo => (StatusCode::CONFLICT, "nothing_to_redo"),
            EditError::OutOfBounds { .. } => (StatusCode::BAD_REQUEST, "out_of_bounds"),
            EditError::ParseError { .. } => (StatusCode::BAD_REQUEST, "parse_error"),
            EditError::InvalidPatch { .. } | EditError::InvalidCommand { .. } => {
                (StatusCode::BAD_REQUEST, "invalid_command")
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Conflict { expected, current } => ApiError::new(
                StatusCode::CONFLICT,
                "revision_conflict",
                format!("base revision {expected} is stale; current revision is {current}"),
            ),
            SessionError::Edit(e) => e.into(),
            SessionError::Persist(m) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persist_failed", m),
        }
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::UnknownImage(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_image", e.to_string()),
            EvalError::DuplicateVerdict(_) => ApiError::new(StatusCode::CONFLICT, "duplicate_verdict", e.to_string()),
            _ => ApiError::bad_request(e.to_string()),
        }
    }
}

/// Judging study plus an optional append-only verdict log.
pub struct StudyStore {
    study: Mutex<Study>,
    log: Option<PathBuf>,
}

impl StudyStore {
    /// Builds the study and replays any verdicts already logged.
    pub fn new(config: StudyConfig, log: Option<PathBuf>) -> Result<Self, EvalError> {
        let mut study = Study::new(config)?;
        if let Some(path) = &log {
            if let Ok(text) = std::fs::read_to_string(path) {
                for rec in read_records_jsonl(&text)? {
                    study.record_verdict(rec)?;
                }
            }
        }
        Ok(StudyStore {
            study: Mutex::new(study),
            log,
        })
    }

    pub fn with<T>(&self, f: impl FnOnce(&mut Study) -> T) -> T {
        f(&mut self.study.lock().expect("study lock"))
    }

    fn append(&self, rec: &ComparisonRecord) -> std::io::Result<()> {
        use std::io::Write;
        if let Some(path) = &self.log {
            if let Some(d) = path.parent() {
                std::fs::create_dir_all(d)?;
            }
            let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(write_records_jsonl(std::slice::from_ref(rec)).as_bytes())?;
        }
        Ok(())
    }
}

pub struct AppState {
    pub sessions: SessionStore,
    pub study: StudyStore,
    /// Settings for sessions created from a prompt.
    pub base: PipelineConfig,
    pub libs: Arc<Libraries>,
}

impl AppState {
    /// In-memory state with the given pipeline defaults and study.
    pub fn in_memory(base: PipelineConfig, libs: Libraries, study: StudyConfig) -> Result<Self, EvalError> {
        Ok(AppState {
            sessions: SessionStore::in_memory(),
            study: StudyStore::new(study, None)?,
            base,
            libs: Arc::new(libs),
        })
    }

    /// Persistent state under `data_dir` (`sessions/`, `eval/verdicts.jsonl`).
    pub fn open(
        data_dir: &Path,
        base: PipelineConfig,
        libs: Libraries,
        study: StudyConfig,
    ) -> Result<Self, anyhow::Error> {
        Ok(AppState {
            sessions: SessionStore::open(&data_dir.join("sessions"))?,
            study: StudyStore::new(study, Some(data_dir.join("eval").join("verdicts.jsonl")))?,
            base,
            libs: Arc::new(libs),
        })
    }
}

type AppResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/scene", get(get_scene))
        .route("/sessions/{id}/commands", post(post_command))
        .route("/sessions/{id}/undo", post(post_undo))
        .route("/sessions/{id}/redo", post(post_redo))
        .route("/sessions/{id}/events", get(get_events))
        .route("/eval/schedule", get(get_schedule))
        .route("/eval/verdicts", post(post_verdict))
        .route("/eval/leaderboard", get(get_leaderboard))
        .with_state(state)
}

/// Binds and serves until ctrl-c.
pub async fn serve_api(addr: &str, state: Arc<AppState>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_listener(listener, state).await
}

pub async fn serve_listener(listener: tokio::net::TcpListener, state: Arc<AppState>) -> anyhow::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> AppResult<T> {
    if body.iter().all(|b| b.is_ascii_whitespace()) {
        return serde_json::from_str("{}").map_err(|e| ApiError::bad_request(e.to_string()));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

async fn session(state: &AppState, id: &str) -> AppResult<Arc<Session>> {
    state
        .sessions
        .get(id)
        .await
        .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "status": "ok", "sessions": state.sessions.list().await.len() }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CreateSession {
    prompt: Option<String>,
    layout_path: Option<PathBuf>,
    height_path: Option<PathBuf>,
    seed: Option<u64>,
    name: Option<String>,
    asset_source: Option<AssetSource>,
    /// Inline scene document.
    document: Option<Value>,
    /// Scene document file on the server.
    path: Option<PathBuf>,
}

fn scene_error(e: SceneError) -> ApiError {
    ApiError::bad_request(e.to_string())
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> AppResult<Response> {
    let req: CreateSession = parse_json(&body)?;
    let sources = [
        req.prompt.is_some() || req.layout_path.is_some() || req.height_path.is_some(),
        req.document.is_some(),
        req.path.is_some(),
    ];
    if sources.iter().filter(|s| **s).count() != 1 {
        return Err(ApiError::bad_request(
            "give exactly one of prompt (or layout_path and height_path), document or path",
        ));
    }
    let mut report = Value::Null;
    let doc = if let Some(v) = req.document {
        load_document(&serde_json::to_vec(&v).expect("value serializes")).map_err(scene_error)?
    } else if let Some(p) = req.path {
        load_document_from_path(&p).map_err(scene_error)?
    } else {
        let mut cfg = state.base.clone();
        cfg.prompt = req.prompt;
        cfg.layout_path = req.layout_path;
        cfg.height_path = req.height_path;
        cfg.name = req.name.or(cfg.name);
        if let Some(s) = req.seed {
            cfg.seed = s;
        }
        if let Some(a) = req.asset_source {
            cfg.asset_source = a;
        }
        cfg.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
        let libs = state.libs.clone();
        let build = tokio::task::spawn_blocking(move || build_scene(&cfg, &libs))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "pipeline_failed", e.to_string()))?;
        report = serde_json::to_value(&build.report).expect("report serializes");
        build.document
    };
    let instances = doc.instances.len();
    let s = state
        .sessions
        .create(doc)
        .await
        .map_err(|m| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persist_failed", m))?;
    let body = json!({
        "id": s.id,
        "revision": s.revision(),
        "instances": instances,
        "report": report,
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<Value> {
    let list: Vec<Value> = state
        .sessions
        .list()
        .await
        .iter()
        .map(|s| json!({ "id": s.id, "revision": s.revision() }))
        .collect();
    Json(Value::Array(list))
}

async fn session_info(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> AppResult<Json<Value>> {
    let s = session(&state, &id).await?;
    let info = s
        .read(|doc| {
            json!({
                "id": id,
                "name": doc.metadata.name,
                "revision": doc.revision,
                "instances": doc.instances.len(),
                "can_undo": !doc.undo_stack.is_empty(),
                "can_redo": !doc.redo_stack.is_empty(),
            })
        })
        .await;
    Ok(Json(info))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct SceneQuery {
    format: Option<String>,
}

async fn get_scene(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<SceneQuery>,
    headers: HeaderMap,
) -> AppResult<Response> {
    let s = session(&state, &id).await?;
    let wants_glb = match q.format.as_deref() {
        Some("glb") => true,
        Some("json") | None => headers
            .get(header::ACCEPT)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|a| a.contains("model/gltf-binary")),
        Some(other) => return Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    };
    let (bytes, revision) = s
        .read(|doc| {
            let bytes = if wants_glb {
                export_gltf(doc)
            } else {
                save_document(doc)
            };
            (bytes, doc.revision)
        })
        .await;
    let bytes = bytes.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "export_failed", e.to_string()))?;
    let ctype = if wants_glb {
        "model/gltf-binary"
    } else {
        "application/json"
    };
    Ok((
        [
            (header::CONTENT_TYPE, ctype.to_string()),
            (header::ETAG, format!("\"{revision}\"")),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CommandField {
    Text(String),
    Structured(EditCommand),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommandRequest {
    command: CommandField,
    #[serde(default)]
    base_revision: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RevisionQuery {
    base_revision: Option<u64>,
}

fn is_json(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|c| c.starts_with("application/json"))
}

/// Accepts plain command text, `{"command": <text or object>,
/// "base_revision": n}`, or a bare command object.
fn parse_command_body(headers: &HeaderMap, body: &[u8], query_rev: Option<u64>) -> AppResult<(EditCommand, Option<u64>)> {
    if !is_json(headers) {
        let text = std::str::from_utf8(body).map_err(|_| ApiError::bad_request("command text is not UTF-8"))?;
        return Ok((parse_command(text)?, query_rev));
    }
    let v: Value = parse_json(body)?;
    if v.get("command").is_some() {
        let req: CommandRequest =
            serde_json::from_value(v).map_err(|e| ApiError::bad_request(format!("invalid command request: {e}")))?;
        let cmd = match req.command {
            CommandField::Text(t) => parse_command(&t)?,
            CommandField::Structured(c) => c,
        };
        Ok((cmd, req.base_revision.or(query_rev)))
    } else {
        let cmd: EditCommand =
            serde_json::from_value(v).map_err(|e| ApiError::bad_request(format!("invalid command: {e}")))?;
        Ok((cmd, query_rev))
    }
}

async fn post_command(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RevisionQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> AppResult<Json<Value>> {
    let s = session(&state, &id).await?;
    let (cmd, base) = parse_command_body(&headers, &body, q.base_revision)?;
    let out = s.mutate(Mutation::Apply(cmd), base).await?;
    Ok(Json(serde_json::to_value(out).expect("outcome serializes")))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HistoryRequest {
    base_revision: Option<u64>,
}

async fn history(state: &AppState, id: &str, q: RevisionQuery, body: &[u8], m: Mutation) -> AppResult<Json<Value>> {
    let s = session(state, id).await?;
    let req: HistoryRequest = parse_json(body)?;
    let out = s.mutate(m, req.base_revision.or(q.base_revision)).await?;
    Ok(Json(serde_json::to_value(out).expect("outcome serializes")))
}

async fn post_undo(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RevisionQuery>,
    body: Bytes,
) -> AppResult<Json<Value>> {
    history(&state, &id, q, &body, Mutation::Undo).await
}

async fn post_redo(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RevisionQuery>,
    body: Bytes,
) -> AppResult<Json<Value>> {
    history(&state, &id, q, &body, Mutation::Redo).await
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct EventsQuery {
    since: u64,
    timeout_ms: Option<u64>,
}

async fn get_events(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<EventsQuery>,
) -> AppResult<Json<Value>> {
    let s = session(&state, &id).await?;
    let wait = Duration::from_millis(q.timeout_ms.unwrap_or(DEFAULT_POLL_MS).min(MAX_POLL_MS));
    let events = s.events_since(q.since, wait).await;
    Ok(Json(json!({ "revision": s.revision(), "events": events })))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ScheduleQuery {
    dimension: Option<String>,
    /// Include already judged pairs.
    all: bool,
    limit: Option<usize>,
}

/// Pairs carry image ids only, never method names.
async fn get_schedule(State(state): State<Arc<AppState>>, Query(q): Query<ScheduleQuery>) -> AppResult<Json<Value>> {
    let dim = match q.dimension.as_deref() {
        None => None,
        Some(code) => Some(
            Dimension::from_code(code).ok_or_else(|| ApiError::bad_request(format!("unknown dimension {code:?}")))?,
        ),
    };
    let body = state.study.with(|study| {
        let keep = |p: &&majutsu_eval::ScheduledPair| dim.is_none_or(|d| p.dimension == d);
        let pending = study.pending().filter(keep).count();
        let pairs: Vec<&majutsu_eval::ScheduledPair> = if q.all {
            study.schedule.iter().filter(keep).collect()
        } else {
            study.pending().filter(keep).collect()
        };
        let pairs: Vec<_> = pairs.into_iter().take(q.limit.unwrap_or(usize::MAX)).collect();
        json!({
            "total": study.schedule.iter().filter(keep).count(),
            "pending": pending,
            "pairs": pairs,
        })
    });
    Ok(Json(body))
}

async fn post_verdict(State(state): State<Arc<AppState>>, body: Bytes) -> AppResult<Response> {
    let rec: ComparisonRecord = parse_json(&body)?;
    let stored = state.study.with(|study| study.record_verdict(rec).cloned())?;
    state
        .study
        .append(&stored)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persist_failed", e.to_string()))?;
    Ok((StatusCode::CREATED, Json(stored)).into_response())
}

async fn get_leaderboard(State(state): State<Arc<AppState>>) -> Json<Value> {
    let board = state.study.with(|study| study.leaderboard());
    Json(json!({
        "record_count": board.record_count(),
        "dimensions": board.dimensions,
    }))
}
