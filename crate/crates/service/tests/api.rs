use std::sync::{mpsc, Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use elicit_core::dialogue::{Engine, EngineConfig, SessionState, SessionStore, TurnOutcome};
use elicit_core::diversify::Grid;
use elicit_core::embedding::HashingEmbedder;
use elicit_core::evalsim::synth::generate_catalog;
use elicit_core::exec::Execution;
use elicit_core::parsing::{ParseError, ParsedTurn, ParserAdapter, RuleParser, SchemaSummary, Turn};
use elicit_service::{app, router, AppState, CreatedSession, MessageResponse, ResponseKind, ServiceConfig, SessionView};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn engine(parser: Arc<dyn ParserAdapter>) -> Arc<Engine> {
    Arc::new(Engine::new(
        Arc::new(generate_catalog(200, 11)),
        Arc::new(HashingEmbedder::default()),
        parser,
        Execution::Sequential,
    ))
}

fn test_app() -> (Router, Arc<Engine>) {
    let e = engine(Arc::new(RuleParser));
    let state = AppState::new(e.clone(), Arc::new(SessionStore::new(None)), EngineConfig::default());
    (router(state), e)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn new_session(app: &Router) -> String {
    let (status, body) = call(app, "POST", "/sessions", Some(json!({}))).await;
    assert_eq!(status, StatusCode::CREATED);
    body["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn health_and_schema() {
    let (app, _) = test_app();
    let (status, body) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["items"], 200);

    let (status, body) = call(&app, "GET", "/catalog/schema", None).await;
    assert_eq!(status, StatusCode::OK);
    let summary: SchemaSummary = serde_json::from_value(body).unwrap();
    assert!(summary.dimension("price").is_some());
}

#[tokio::test]
async fn create_session_defaults_and_validation() {
    let (app, _) = test_app();
    let (status, body) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let created: CreatedSession = serde_json::from_value(body).unwrap();
    assert_eq!(created.k, 2);
    assert_eq!(created.strategy.to_string(), "ES");

    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"strategy": "cr", "k": 3}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["strategy"], "cr");
    assert_eq!(body["k"], 3);

    for bad in [json!({"strategy": "zz"}), json!({"k": -1}), json!({"k": 99}), json!({"colour": 1})] {
        let (status, body) = call(&app, "POST", "/sessions", Some(bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert!(body["error"].is_string());
    }
}

#[tokio::test]
async fn fresh_session_snapshot() {
    let (app, _) = test_app();
    let id = new_session(&app).await;
    let (status, body) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let view: SessionView = serde_json::from_value(body).unwrap();
    assert!(view.state.filters.is_empty());
    assert_eq!(view.state.phase, elicit_core::dialogue::Phase::Interviewing);
    assert_eq!(view.session_id, id);

    let (status, _) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn vague_message_gets_a_question_and_filters_are_visible() {
    let (app, _) = test_app();
    let id = new_session(&app).await;
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/messages"), Some(json!({"text": "I need a car under $30k"}))).await;
    assert_eq!(status, StatusCode::OK);
    let resp: MessageResponse = serde_json::from_value(body.clone()).unwrap();
    assert_eq!(resp.kind, ResponseKind::Question);
    assert!(resp.question.is_some());
    assert!(body.get("entropy_debug").is_none());
    assert!(body.get("grid").is_none());

    let (_, body) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let view: SessionView = serde_json::from_value(body).unwrap();
    assert!(view.state.filters.contains("price"));
    assert_eq!(view.state.history.len(), 2);
}

#[tokio::test]
async fn debug_flag_exposes_entropy() {
    let (app, _) = test_app();
    let id = new_session(&app).await;
    let (_, body) = call(&app, "POST", &format!("/sessions/{id}/messages?debug=1"), Some(json!({"text": "I need a car"}))).await;
    let debug = &body["entropy_debug"];
    assert_eq!(debug["candidate_count"], 200);
    assert!(debug["dimensions"].as_array().unwrap().len() > 5);
}

#[tokio::test]
async fn impatient_message_returns_grid_that_round_trips() {
    let (app, engine) = test_app();
    let id = new_session(&app).await;
    let text = "whatever, just show me cars";
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/messages"), Some(json!({"text": text}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["type"], "recommendations");
    let grid: Grid = serde_json::from_value(body["grid"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&grid).unwrap(), body["grid"]);

    // Same turn run directly against the engine gives the same grid.
    let mut state = SessionState::new("direct", 2);
    let direct = engine.advance_turn(&mut state, text, &EngineConfig::default()).unwrap();
    match direct.outcome {
        TurnOutcome::Recommendations(r) => assert_eq!(r.grid, grid),
        other => panic!("expected recommendations, got {other:?}"),
    }

    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/messages"), Some(json!({"text": "more"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn message_errors() {
    let (app, _) = test_app();
    let id = new_session(&app).await;
    let uri = format!("/sessions/{id}/messages");
    assert_eq!(call(&app, "POST", &uri, Some(json!({"text": "   "}))).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "POST", &uri, Some(json!({"txt": "hi"}))).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "POST", &uri, None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(
        call(&app, "POST", "/sessions/missing/messages", Some(json!({"text": "hi"}))).await.0,
        StatusCode::NOT_FOUND
    );
}

struct Gate {
    entered: Mutex<mpsc::Sender<()>>,
    release: Mutex<mpsc::Receiver<()>>,
}

impl ParserAdapter for Gate {
    fn parse(&self, text: &str, schema: &SchemaSummary, history: &[Turn]) -> Result<ParsedTurn, ParseError> {
        self.entered.lock().unwrap().send(()).unwrap();
        self.release.lock().unwrap().recv().unwrap();
        RuleParser.parse(text, schema, history)
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_messages_one_wins_one_conflicts() {
    let (entered_tx, entered_rx) = mpsc::channel();
    let (release_tx, release_rx) = mpsc::channel();
    let e = engine(Arc::new(Gate {
        entered: Mutex::new(entered_tx),
        release: Mutex::new(release_rx),
    }));
    let app = router(AppState::new(e, Arc::new(SessionStore::new(None)), EngineConfig::default()));
    let id = new_session(&app).await;
    let uri = format!("/sessions/{id}/messages");

    let (app2, uri2) = (app.clone(), uri.clone());
    let first = tokio::spawn(async move { call(&app2, "POST", &uri2, Some(json!({"text": "a hybrid"}))).await });
    tokio::task::spawn_blocking(move || entered_rx.recv().unwrap()).await.unwrap();

    let (status, _) = call(&app, "POST", &uri, Some(json!({"text": "an SUV"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    // Reads during the in-flight turn see the last committed state.
    let (_, body) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(body["state"]["history"].as_array().unwrap().len(), 0);

    release_tx.send(()).unwrap();
    let (status, _) = first.await.unwrap();
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn serves_static_assets_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>grid</html>").unwrap();
    let cfg = ServiceConfig {
        static_dir: Some(dir.path().to_path_buf()),
        ..ServiceConfig::default()
    };
    let e = engine(Arc::new(RuleParser));
    let app = app(&cfg, AppState::new(e, Arc::new(SessionStore::new(None)), cfg.engine_config()));
    let (status, body) = call(&app, "GET", "/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, Value::String("<html>grid</html>".into()));
    assert_eq!(call(&app, "GET", "/healthz", None).await.0, StatusCode::OK);
}

#[tokio::test]
async fn loads_catalog_from_config_files() {
    let dir = tempfile::tempdir().unwrap();
    elicit_core::evalsim::synth::write_dataset(dir.path(), 60, 2, 5).unwrap();
    let cfg = ServiceConfig {
        catalog_path: dir.path().join("catalog.csv"),
        log_dir: Some(dir.path().join("logs")),
        ..ServiceConfig::default()
    };
    let app = app(&cfg, AppState::from_config(&cfg).unwrap());
    assert_eq!(call(&app, "GET", "/healthz", None).await.1["items"], 60);
    let id = new_session(&app).await;
    call(&app, "POST", &format!("/sessions/{id}/messages"), Some(json!({"text": "skip"}))).await;
    let log = std::fs::read_to_string(dir.path().join("logs").join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(log.lines().count(), 2);
}
