//! HTTP/JSON service: schema, model listing and prediction.
//!
//! All state is built before the listener starts and is read-only after.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gradecast_core::{PredictError, PredictRequest, Registry};
use serde_json::json;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone)]
struct AppState {
    registry: Arc<Registry>,
    schema_json: Arc<str>,
}

pub fn router(registry: Registry, static_dir: Option<PathBuf>) -> Router {
    let state = AppState { schema_json: registry.schema().to_json().into(), registry: Arc::new(registry) };
    let api = Router::new()
        .route("/api/schema", get(schema))
        .route("/api/models", get(models))
        .route("/api/predict", post(predict))
        .route("/api/health", get(health))
        .with_state(state);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(CorsLayer::permissive())
}

pub async fn serve(addr: SocketAddr, app: Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn schema(State(state): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], state.schema_json.to_string()).into_response()
}

async fn models(State(state): State<AppState>) -> Response {
    Json(state.registry.list()).into_response()
}

async fn health() -> Response {
    Json(json!({ "status": "ok", "version": VERSION })).into_response()
}

fn error(status: StatusCode, body: serde_json::Value) -> Response {
    (status, Json(body)).into_response()
}

async fn predict(State(state): State<AppState>, body: Bytes) -> Response {
    let request: PredictRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, json!({ "error": format!("malformed request: {e}") })),
    };
    match state.registry.predict(&request) {
        Ok(response) => Json(response).into_response(),
        Err(PredictError::UnknownModel(id)) => {
            error(StatusCode::NOT_FOUND, json!({ "error": format!("unknown model `{id}`") }))
        }
        Err(PredictError::Invalid(report)) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({
                "error": format!("invalid responses ({report})"),
                "missing": report.missing,
                "out_of_scale": report.out_of_scale,
                "unknown": report.unknown,
            }),
        ),
        Err(PredictError::Failed(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": e.to_string() })),
    }
}
