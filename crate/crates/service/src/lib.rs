//! HTTP/JSON session API over the semantic map pipeline.
//!
//! Each upload creates a session holding one [`SessionBundle`]. Mutating
//! requests on a session are exclusive: a second edit arriving while one
//! is in flight gets `409 Conflict` instead of queueing.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::QueryRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex as AsyncMutex;
use uuid::Uuid;

use semmap_core::eval::PrecisionStatus;
use semmap_core::formats::{graph_to_dot, graph_to_json};
use semmap_core::{
    run_pipeline, AccuracyMode, EditAction, EditError, GraphFormat, MergeOrder, PipelineConfig, PipelineError,
    SessionBundle, UndoOutcome,
};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Largest accepted table upload in bytes.
    pub max_table_bytes: usize,
    /// Idle time after which a session is dropped.
    pub ttl: Duration,
    /// Extra time every mutating request holds its session. Zero outside
    /// tests.
    pub edit_delay: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_table_bytes: 8 << 20,
            ttl: Duration::from_secs(24 * 60 * 60),
            edit_delay: Duration::ZERO,
        }
    }
}

struct Store {
    bundle: SessionBundle,
    /// Per-candidate edit counter, used to drop stale precision refreshes.
    revisions: Vec<u64>,
}

struct Session {
    store: Arc<AsyncMutex<Store>>,
    busy: AtomicBool,
    last_access: Mutex<Instant>,
}

impl Session {
    fn touch(&self) {
        *self.last_access.lock().unwrap() = Instant::now();
    }

    fn idle(&self) -> Duration {
        self.last_access.lock().unwrap().elapsed()
    }
}

/// Clears the session's busy flag when dropped.
struct BusyGuard(Arc<Session>);

impl BusyGuard {
    fn acquire(session: &Arc<Session>) -> Result<Self, ApiError> {
        session
            .busy
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map_err(|_| {
                ApiError::new(
                    StatusCode::CONFLICT,
                    "edit",
                    "another edit on this session is in progress",
                )
            })?;
        Ok(BusyGuard(session.clone()))
    }
}

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::Release);
    }
}

pub struct AppState {
    config: ServiceConfig,
    sessions: Mutex<HashMap<Uuid, Arc<Session>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState {
            config,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let not_found = || ApiError::not_found(format!("no session {id}"));
        let id = Uuid::parse_str(id).map_err(|_| not_found())?;
        let mut sessions = self.sessions.lock().unwrap();
        let s = sessions.get(&id).cloned().ok_or_else(not_found)?;
        if s.idle() > self.config.ttl {
            sessions.remove(&id);
            return Err(not_found());
        }
        s.touch();
        Ok(s)
    }

    /// Drops sessions idle for longer than the TTL and returns how many.
    pub fn evict_expired(&self) -> usize {
        let ttl = self.config.ttl;
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| s.idle() <= ttl);
        before - sessions.len()
    }
}

/// Periodically evicts expired sessions.
pub fn spawn_reaper(state: Arc<AppState>) -> tokio::task::JoinHandle<()> {
    let period = (state.config.ttl / 4).clamp(Duration::from_millis(10), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = state.evict_expired();
            if n > 0 {
                tracing::info!(evicted = n, "expired sessions dropped");
            }
        }
    })
}

/// Error response: `{"error": {"stage": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    stage: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, stage: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            stage: stage.into(),
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "request", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "request", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.stage.to_string(), e.source.to_string())
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> Self {
        let status = match e {
            EditError::NoSuchCandidate(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, "edit", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"stage": self.stage, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    // room for the gold file and multipart framing next to the table
    let body_limit = state.config.max_table_bytes.saturating_mul(2).saturating_add(1 << 20);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session).delete(delete_session))
        .route("/api/sessions/{id}/candidates", get(list_candidates))
        .route("/api/sessions/{id}/candidates/{i}", get(get_candidate))
        .route("/api/sessions/{id}/candidates/{i}/form/{form}", get(get_form))
        .route("/api/sessions/{id}/candidates/{i}/edits", post(post_edit))
        .route("/api/sessions/{id}/candidates/{i}/merge", post(post_merge))
        .route("/api/sessions/{id}/candidates/{i}/undo", post(post_undo))
        .route("/api/sessions/{id}/candidates/{i}/export", get(export))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({"status": "ok", "sessions": state.session_count()}))
}

#[derive(Debug, Default, Deserialize)]
struct CreateParams {
    k: Option<usize>,
    m: Option<usize>,
    merge: Option<bool>,
    merge_order: Option<String>,
    acc_mode: Option<String>,
}

impl CreateParams {
    fn config(&self) -> ApiResult<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(k) = self.k {
            if k == 0 {
                return Err(ApiError::bad_request("k must be at least 1"));
            }
            cfg.k = k;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        cfg.merge = self.merge.unwrap_or(false);
        if let Some(o) = &self.merge_order {
            cfg.merge_order = o.parse::<MergeOrder>().map_err(ApiError::bad_request)?;
        }
        if let Some(a) = &self.acc_mode {
            cfg.eval.acc_mode = a.parse::<AccuracyMode>().map_err(ApiError::bad_request)?;
        }
        Ok(cfg)
    }
}

async fn read_field(mut field: axum::extract::multipart::Field<'_>, cap: usize) -> ApiResult<Vec<u8>> {
    let name = field.name().unwrap_or_default().to_owned();
    let mut buf = Vec::new();
    while let Some(chunk) = field
        .chunk()
        .await
        .map_err(|e| ApiError::new(e.status(), "request", e.body_text()))?
    {
        if buf.len() + chunk.len() > cap {
            return Err(ApiError::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                "request",
                format!("{name} exceeds the {cap}-byte upload limit"),
            ));
        }
        buf.extend_from_slice(&chunk);
    }
    Ok(buf)
}

fn summary(b: &SessionBundle) -> Value {
    let cfg = b.config();
    let t = b.timings();
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    json!({
        "table": b.table().stats(),
        "functions": b.table().functions(),
        "k": cfg.k,
        "m": cfg.m,
        "merge": cfg.merge,
        "merge_order": cfg.merge_order,
        "acc_mode": cfg.eval.acc_mode,
        "has_gold": b.gold().is_some(),
        "enumerated": b.enumerated(),
        "truncated": b.truncated(),
        "max_weight": b.max_weight(),
        "timings_ms": {
            "parse": ms(t.parse),
            "build": ms(t.build),
            "enumerate": ms(t.enumerate),
            "merge": ms(t.merge),
            "evaluate": ms(t.evaluate),
            "total": ms(t.total()),
        },
        "candidates": b.candidates().iter().enumerate().map(|(i, c)| json!({
            "index": i,
            "history_len": c.history_len(),
            "report": c.report(),
        })).collect::<Vec<_>>(),
    })
}

fn graph_value(g: &semmap_core::ConceptualGraph) -> Value {
    serde_json::from_str(&graph_to_json(g)).expect("graph json is valid")
}

fn candidate_value(b: &SessionBundle, i: usize) -> ApiResult<Value> {
    let c = b.candidate(i)?;
    Ok(json!({
        "index": i,
        "graph": graph_value(c.graph()),
        "report": c.report(),
        "history": c.history().collect::<Vec<_>>(),
    }))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    params: Result<Query<CreateParams>, QueryRejection>,
    multipart: Result<Multipart, MultipartRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let cfg = params.config()?;
    let mut multipart = multipart.map_err(|e| ApiError::new(e.status(), "request", e.body_text()))?;
    let cap = state.config.max_table_bytes;
    let (mut table, mut gold) = (None, None);
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::new(e.status(), "request", e.body_text()))?
    {
        match field.name() {
            Some("table") => table = Some(read_field(field, cap).await?),
            Some("gold") => gold = Some(read_field(field, cap).await?),
            _ => {}
        }
    }
    let table = table.ok_or_else(|| ApiError::bad_request("multipart field \"table\" is required"))?;
    let bytes = table.len();

    let bundle = tokio::task::spawn_blocking(move || run_pipeline(&table, gold.as_deref(), &cfg))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;

    let id = Uuid::new_v4();
    let body = json!({"id": id, "summary": summary(&bundle)});
    let stats = bundle.table().stats();
    tracing::info!(
        session = %id,
        bytes,
        functions = stats.functions,
        forms = stats.forms,
        k = cfg.k,
        m = cfg.m,
        merge = cfg.merge,
        enumerated = bundle.enumerated(),
        "session created"
    );
    let session = Arc::new(Session {
        store: Arc::new(AsyncMutex::new(Store {
            revisions: vec![0; bundle.candidates().len()],
            bundle,
        })),
        busy: AtomicBool::new(false),
        last_access: Mutex::new(Instant::now()),
    });
    state.sessions.lock().unwrap().insert(id, session);
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = state.session(&id)?;
    let store = s.store.lock().await;
    Ok(Json(json!({"id": id, "summary": summary(&store.bundle)})))
}

async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let uuid = Uuid::parse_str(&id).map_err(|_| ApiError::not_found(format!("no session {id}")))?;
    match state.sessions.lock().unwrap().remove(&uuid) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(format!("no session {id}"))),
    }
}

async fn list_candidates(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = state.session(&id)?;
    let store = s.store.lock().await;
    let b = &store.bundle;
    let list = (0..b.candidates().len())
        .map(|i| candidate_value(b, i))
        .collect::<ApiResult<Vec<_>>>()?;
    Ok(Json(json!({"candidates": list})))
}

fn parse_index(raw: &str) -> ApiResult<usize> {
    raw.parse()
        .map_err(|_| ApiError::not_found(format!("no candidate {raw}")))
}

async fn get_candidate(
    State(state): State<Arc<AppState>>,
    Path((id, i)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    let i = parse_index(&i)?;
    let s = state.session(&id)?;
    let store = s.store.lock().await;
    Ok(Json(candidate_value(&store.bundle, i)?))
}

/// A table row given as its index, `language:form`, or a form name that
/// occurs in one language only.
fn resolve_form(b: &SessionBundle, key: &str) -> ApiResult<usize> {
    let rows = b.table().instances();
    if let Ok(i) = key.parse::<usize>() {
        return if i < rows.len() {
            Ok(i)
        } else {
            Err(ApiError::not_found(format!("no form row {i}")))
        };
    }
    let hits: Vec<usize> = match key.split_once(':') {
        Some((lang, form)) => rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.language == lang && r.form == form)
            .map(|(i, _)| i)
            .collect(),
        None => rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.form == key)
            .map(|(i, _)| i)
            .collect(),
    };
    match hits[..] {
        [i] => Ok(i),
        [] => Err(ApiError::not_found(format!("no form {key:?}"))),
        _ => Err(ApiError::bad_request(format!(
            "form {key:?} is ambiguous; use language:form or a row index"
        ))),
    }
}

async fn get_form(
    State(state): State<Arc<AppState>>,
    Path((id, i, form)): Path<(String, String, String)>,
) -> ApiResult<Json<Value>> {
    let i = parse_index(&i)?;
    let s = state.session(&id)?;
    let store = s.store.lock().await;
    let b = &store.bundle;
    b.candidate(i)?;
    let row = resolve_form(b, &form)?;
    let view = b.form_view(i, row).expect("candidate and row were checked");
    Ok(Json(serde_json::to_value(view).expect("form view serializes")))
}

/// Runs `op` on candidate `i` with exclusive use of the session, then
/// schedules a background precision refresh if the new report left it
/// pending.
async fn mutate<F>(state: &AppState, id: &str, i: &str, op: F) -> ApiResult<Json<Value>>
where
    F: FnOnce(&mut SessionBundle, usize) -> Result<Value, EditError> + Send + 'static,
{
    let i = parse_index(i)?;
    let session = state.session(id)?;
    let busy = BusyGuard::acquire(&session)?;
    let mut store = session.store.clone().lock_owned().await;
    store.bundle.candidate(i)?;
    let delay = state.config.edit_delay;

    let (body, revision, pending) = tokio::task::spawn_blocking(move || {
        let _busy = busy;
        if !delay.is_zero() {
            std::thread::sleep(delay);
        }
        let mut body = op(&mut store.bundle, i)?;
        store.revisions[i] += 1;
        let cand = store.bundle.candidate(i)?;
        let pending = cand.report().precision_status == PrecisionStatus::Pending;
        body["candidate"] = json!(i);
        body["report"] = json!(cand.report());
        body["history_len"] = json!(cand.history_len());
        Ok::<_, EditError>((body, store.revisions[i], pending))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;

    if pending {
        let store = session.store.clone();
        tokio::spawn(async move {
            let mut guard = store.lock_owned().await;
            if guard.revisions[i] != revision {
                return;
            }
            let _ = tokio::task::spawn_blocking(move || guard.bundle.refresh_precision(i).map(|_| ())).await;
        });
    }
    Ok(Json(body))
}

fn action_kind(a: &EditAction) -> &'static str {
    match a {
        EditAction::AddEdge { .. } => "add_edge",
        EditAction::DeleteEdge { .. } => "delete_edge",
        EditAction::SetWeight { .. } => "set_weight",
        EditAction::MergeAll => "merge_all",
    }
}

async fn post_edit(
    State(state): State<Arc<AppState>>,
    Path((id, i)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let action: EditAction =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid edit action: {e}")))?;
    tracing::debug!(session = %id, candidate = %i, kind = action_kind(&action), "edit");
    mutate(&state, &id, &i, move |b, i| {
        b.apply_edit_to(i, action.clone())?;
        Ok(json!({"action": action}))
    })
    .await
}

async fn post_merge(
    State(state): State<Arc<AppState>>,
    Path((id, i)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    mutate(&state, &id, &i, |b, i| {
        b.apply_edit_to(i, EditAction::MergeAll)?;
        Ok(json!({"action": EditAction::MergeAll}))
    })
    .await
}

async fn post_undo(
    State(state): State<Arc<AppState>>,
    Path((id, i)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    mutate(&state, &id, &i, |b, i| {
        let reverted = match b.undo_on(i)? {
            UndoOutcome::Reverted(a) => Some(a),
            UndoOutcome::NothingToUndo => None,
        };
        Ok(json!({"reverted": reverted}))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct ExportParams {
    format: Option<String>,
}

async fn export(
    State(state): State<Arc<AppState>>,
    Path((id, i)): Path<(String, String)>,
    params: Result<Query<ExportParams>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let format = match params.format.as_deref() {
        None => GraphFormat::Json,
        Some(f) => f.parse::<GraphFormat>().map_err(ApiError::bad_request)?,
    };
    let i = parse_index(&i)?;
    let s = state.session(&id)?;
    let store = s.store.lock().await;
    let g = store.bundle.candidate(i)?.graph();
    let (body, mime, ext) = match format {
        GraphFormat::Json => (graph_to_json(g), "application/json", "json"),
        GraphFormat::Dot => (graph_to_dot(g), "text/vnd.graphviz", "dot"),
    };
    Ok((
        [
            (header::CONTENT_TYPE, mime.to_owned()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"candidate_{i}.{ext}\""),
            ),
        ],
        body,
    )
        .into_response())
}
