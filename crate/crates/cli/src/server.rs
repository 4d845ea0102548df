//! HTTP API over the artifacts directory. Artifacts are loaded once at
//! startup and never written.

use std::sync::Arc;

use amr_core::assistant::{
    answer_question, AssistantError, Generator, OnGenerationError,
};
use amr_core::eval::EvalReport;
use amr_core::rag::{Embedder, VectorIndex};
use axum::body::{Body, Bytes};
use axum::extract::{Request, State};
use axum::http::{header, HeaderName, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use serde_json::json;

use crate::commands::{
    load_index, load_report, make_embedder, make_generator, on_generation_error,
};
use crate::config::RunConfig;
use crate::error::CliError;

pub const REQUEST_ID: HeaderName = HeaderName::from_static("x-request-id");

/// Loaded artifacts. Responses for `/report` and `/regional` are rendered
/// once so repeated calls return identical bytes.
pub struct Artifacts {
    pub report: EvalReport,
    pub report_bytes: Bytes,
    pub regional_bytes: Bytes,
    pub index: VectorIndex,
}

impl Artifacts {
    pub fn new(report: EvalReport, report_bytes: Vec<u8>, index: VectorIndex) -> Self {
        let regional = json!({
            "model": report.best_model,
            "regions": report.regional,
            "excluded_regions": report.excluded_regions,
            "by_model": report.regional_by_model,
        });
        Self {
            regional_bytes: Bytes::from(regional.to_string()),
            report_bytes: Bytes::from(report_bytes),
            report,
            index,
        }
    }
}

pub struct AppState {
    pub artifacts: Option<Artifacts>,
    /// Why artifacts are absent, reported in 409 bodies.
    pub missing_reason: String,
    pub embedder: Box<dyn Embedder>,
    pub generator: Option<Box<dyn Generator>>,
    pub on_error: OnGenerationError,
}

impl AppState {
    /// Loads artifacts named by `cfg`. Missing or unreadable artifacts leave
    /// the service up with `/report`, `/regional` and `/query` answering 409.
    pub fn from_config(cfg: &RunConfig) -> Self {
        let layout = cfg.layout();
        let loaded = load_report(&layout)
            .and_then(|(report, bytes)| Ok(Artifacts::new(report, bytes, load_index(&layout)?)));
        let (artifacts, missing_reason) = match loaded {
            Ok(a) => (Some(a), String::new()),
            Err(e) => {
                log::warn!("serving without artifacts: {e}");
                (None, e.to_string())
            }
        };
        Self {
            artifacts,
            missing_reason,
            embedder: make_embedder(cfg),
            generator: make_generator(cfg),
            on_error: on_generation_error(cfg),
        }
    }
}

type Shared = Arc<AppState>;

fn json_response(status: StatusCode, body: impl Into<Body>) -> Response {
    let mut resp = Response::new(body.into());
    *resp.status_mut() = status;
    resp.headers_mut().insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/json"),
    );
    resp
}

fn error_response(status: StatusCode, code: &str, message: &str) -> Response {
    let body = json!({ "error": { "code": code, "message": message } }).to_string();
    json_response(status, body)
}

fn not_loaded(state: &AppState) -> Response {
    error_response(StatusCode::CONFLICT, "artifacts_not_loaded", &state.missing_reason)
}

async fn health() -> Response {
    let body = json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }).to_string();
    json_response(StatusCode::OK, body)
}

async fn report(State(state): State<Shared>) -> Response {
    match &state.artifacts {
        Some(a) => json_response(StatusCode::OK, a.report_bytes.clone()),
        None => not_loaded(&state),
    }
}

async fn regional(State(state): State<Shared>) -> Response {
    match &state.artifacts {
        Some(a) => json_response(StatusCode::OK, a.regional_bytes.clone()),
        None => not_loaded(&state),
    }
}

async fn query(State(state): State<Shared>, body: Bytes) -> Response {
    let question = match serde_json::from_slice::<serde_json::Value>(&body) {
        Ok(v) => match v.get("question").and_then(|q| q.as_str()) {
            Some(q) => q.to_string(),
            None => {
                return error_response(
                    StatusCode::BAD_REQUEST,
                    "malformed_body",
                    "expected {\"question\": \"...\"}",
                )
            }
        },
        Err(e) => return error_response(StatusCode::BAD_REQUEST, "malformed_body", &e.to_string()),
    };
    if question.trim().is_empty() {
        return error_response(StatusCode::BAD_REQUEST, "empty_question", "question is empty");
    }
    if state.artifacts.is_none() {
        return not_loaded(&state);
    }

    let worker = state.clone();
    let result = tokio::task::spawn_blocking(move || {
        let a = worker.artifacts.as_ref().expect("checked above");
        answer_question(
            &question,
            &a.index,
            worker.embedder.as_ref(),
            &a.report,
            worker.generator.as_deref(),
            worker.on_error,
        )
    })
    .await;

    match result {
        // A warning means generation failed and the answer is a fallback.
        Ok(Ok(answer)) => {
            let status = if answer.warning.is_some() {
                StatusCode::BAD_GATEWAY
            } else {
                StatusCode::OK
            };
            match serde_json::to_string(&answer) {
                Ok(body) => json_response(status, body),
                Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "json_error", &e.to_string()),
            }
        }
        Ok(Err(e)) => {
            let status = match &e {
                AssistantError::Generation(_) => StatusCode::BAD_GATEWAY,
                AssistantError::EmptyQuestion => StatusCode::BAD_REQUEST,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            };
            let err = CliError::Assistant(e);
            error_response(status, err.code(), &err.to_string())
        }
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", &e.to_string()),
    }
}

async fn request_id(req: Request, next: Next) -> Response {
    let id = req
        .headers()
        .get(&REQUEST_ID)
        .filter(|v| !v.is_empty() && v.len() <= 128)
        .cloned()
        .unwrap_or_else(|| {
            HeaderValue::from_str(&uuid::Uuid::new_v4().to_string()).expect("uuid is ascii")
        });
    let mut resp = next.run(req).await;
    resp.headers_mut().insert(REQUEST_ID, id);
    resp
}

async fn fallback() -> Response {
    error_response(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/report", get(report))
        .route("/regional", get(regional))
        .route("/query", post(query))
        .fallback(fallback)
        .with_state(Arc::new(state))
        .layer(middleware::from_fn(request_id))
}

/// Binds the configured address and serves until interrupted.
pub fn serve(cfg: &RunConfig, bind: Option<&str>) -> Result<(), CliError> {
    let addr = bind.unwrap_or(&cfg.service.bind).to_string();
    let state = AppState::from_config(cfg);
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::io("start runtime"))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(CliError::io(format!("bind {addr}")))?;
        log::warn!("listening on http://{}", listener.local_addr().map_err(CliError::io("local address"))?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(CliError::io("serve"))
    })
}
