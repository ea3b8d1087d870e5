//! HTTP JSON API over the dialogue engine. All dialogue state lives on the
//! server, keyed by session id.

pub mod config;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use elicit_core::catalog::Catalog;
use elicit_core::dialogue::{
    DialogueError, Engine, EngineConfig, QuestionSpec, SessionState, SessionStore, StoreError, TurnOutcome,
    TurnResult, MAX_QUESTIONS_LIMIT,
};
use elicit_core::diversify::Grid;
use elicit_core::entropy::EntropyReport;
use elicit_core::parsing::ParseError;
use elicit_core::ranking::Strategy;
use serde::{Deserialize, Serialize};

pub use config::{ConfigError, ServiceConfig};

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    store: Arc<SessionStore>,
    defaults: EngineConfig,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, store: Arc<SessionStore>, defaults: EngineConfig) -> Self {
        Self { engine, store, defaults }
    }

    pub fn from_config(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let catalog = Catalog::load_files(&cfg.catalog_path, &cfg.schema_path())
            .map_err(|e| ServiceError::Startup(e.to_string()))?;
        let engine = Engine::with_defaults(Arc::new(catalog));
        Ok(Self::new(
            Arc::new(engine),
            Arc::new(SessionStore::new(cfg.log_dir.clone())),
            cfg.engine_config(),
        ))
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("parser backend failed: {0}")]
    BadGateway(String),
    #[error("{0}")]
    Internal(String),
    #[error("startup: {0}")]
    Startup(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::BadGateway(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Internal(_) | ServiceError::Startup(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => ServiceError::NotFound(id),
            StoreError::Busy => ServiceError::Conflict(e.to_string()),
            StoreError::Turn(DialogueError::SessionDone) => ServiceError::Conflict("session is finished".into()),
            StoreError::Turn(DialogueError::EmptyText) => ServiceError::BadRequest("message text is empty".into()),
            StoreError::Turn(DialogueError::Parse(ParseError::Transport(m))) => ServiceError::BadGateway(m),
            StoreError::Turn(DialogueError::Parse(p)) => ServiceError::BadGateway(p.to_string()),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    strategy: Option<String>,
    k: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub created_at: String,
    pub strategy: Strategy,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub created_at: String,
    pub strategy: Strategy,
    pub state: SessionState,
}

#[derive(Debug, Default, Deserialize)]
struct MessageBody {
    text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Question,
    Recommendations,
}

/// Wire form of one turn's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageResponse {
    #[serde(rename = "type")]
    pub kind: ResponseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<QuestionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    /// Filter dimensions dropped to avoid an empty result.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxed: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_debug: Option<EntropyReport>,
}

impl MessageResponse {
    pub fn from_turn(result: TurnResult, debug: bool) -> Self {
        let entropy_debug = debug.then_some(result.entropy);
        match result.outcome {
            TurnOutcome::Question(q) => Self {
                kind: ResponseKind::Question,
                question: Some(q),
                grid: None,
                relaxed: None,
                candidate_count: None,
                entropy_debug,
            },
            TurnOutcome::Recommendations(r) => Self {
                kind: ResponseKind::Recommendations,
                question: None,
                grid: Some(r.grid),
                relaxed: Some(r.relaxed_dimensions),
                candidate_count: Some(r.candidate_count),
                entropy_debug,
            },
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct DebugFlag {
    debug: Option<String>,
}

impl DebugFlag {
    fn on(&self) -> bool {
        matches!(self.debug.as_deref(), Some("1" | "true" | "yes"))
    }
}

fn parse_json<T: for<'de> Deserialize<'de> + Default>(body: &Bytes, allow_empty: bool) -> Result<T, ServiceError> {
    if allow_empty && body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("invalid body: {e}")))
}

async fn healthz(State(app): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "status": "ok",
        "items": app.engine.catalog().len(),
        "sessions": app.store.len(),
    }))
}

async fn schema(State(app): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::to_value(app.engine.schema_summary()).expect("summary serializes"))
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<CreatedSession>), ServiceError> {
    let req: CreateSession = parse_json(&body, true)?;
    let mut config = app.defaults.clone();
    if let Some(s) = req.strategy {
        config.strategy = s.parse().map_err(ServiceError::BadRequest)?;
    }
    if let Some(k) = req.k {
        if k < 0 || k as usize > MAX_QUESTIONS_LIMIT {
            return Err(ServiceError::BadRequest(format!("k must be between 0 and {MAX_QUESTIONS_LIMIT}")));
        }
        config.max_questions = k as usize;
    }
    let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let state = app.store.create(config.clone(), &created_at)?;
    Ok((
        StatusCode::CREATED,
        Json(CreatedSession {
            session_id: state.session_id,
            created_at,
            strategy: config.strategy,
            k: config.max_questions,
        }),
    ))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    let state = app.store.snapshot(&id)?;
    Ok(Json(SessionView {
        session_id: id.clone(),
        created_at: app.store.created_at(&id)?,
        strategy: app.store.config(&id)?.strategy,
        state,
    }))
}

async fn post_message(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(flag): Query<DebugFlag>,
    body: Bytes,
) -> Result<Json<MessageResponse>, ServiceError> {
    let msg: MessageBody = parse_json(&body, false)?;
    let AppState { engine, store, .. } = app;
    let result = tokio::task::spawn_blocking(move || store.send(&engine, &id, &msg.text))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(MessageResponse::from_turn(result, flag.on())))
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/catalog/schema", get(schema))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .with_state(app)
}

/// Router plus the static client, if configured.
pub fn app(cfg: &ServiceConfig, state: AppState) -> Router {
    let api = router(state);
    match &cfg.static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(cfg: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::from_config(&cfg)?;
    let addr = format!("{}:{}", cfg.host, cfg.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| ServiceError::Startup(format!("bind {addr}: {e}")))?;
    tracing::info!("listening on {addr}");
    axum::serve(listener, app(&cfg, state))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))
}
