use std::convert::Infallible;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use insectbench_core::stimgen::StimKind;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::live::{CommandError, SessionHandle};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandBody {
    pub kind: StimKind,
}

/// Routes for the operator console. With `static_dir`, any other path is
/// served from that directory.
pub fn router(handle: SessionHandle, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new()
        .route("/state", get(state))
        .route("/stream", get(stream))
        .route("/command", post(command))
        .route("/path", get(path))
        .route("/summary", get(summary))
        .with_state(handle);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

fn error(status: StatusCode, body: serde_json::Value) -> Response {
    (status, Json(body)).into_response()
}

async fn state(State(h): State<SessionHandle>) -> Response {
    Json(h.state()).into_response()
}

async fn path(State(h): State<SessionHandle>) -> Response {
    Json(h.path().clone()).into_response()
}

async fn summary(State(h): State<SessionHandle>) -> Response {
    match h.summary().await {
        Some(s) => Json(s).into_response(),
        None => error(StatusCode::SERVICE_UNAVAILABLE, json!({ "error": "session is not running" })),
    }
}

async fn command(State(h): State<SessionHandle>, body: Result<Json<CommandBody>, JsonRejection>) -> Response {
    let Json(body) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, json!({ "error": e.body_text() })),
    };
    match h.command(body.kind).await {
        Ok(accepted) => (StatusCode::ACCEPTED, Json(accepted)).into_response(),
        Err(CommandError::Refractory { remaining_s }) => error(
            StatusCode::TOO_MANY_REQUESTS,
            json!({ "error": "refractory", "remaining_s": remaining_s }),
        ),
        Err(CommandError::Finished) => error(StatusCode::CONFLICT, json!({ "error": "session has finished" })),
        Err(CommandError::Closed) => error(StatusCode::SERVICE_UNAVAILABLE, json!({ "error": "session is not running" })),
    }
}

/// One SSE `data:` line per decimated snapshot, starting with the current one.
/// Slow clients skip to the newest snapshot.
async fn stream(State(h): State<SessionHandle>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let mut rx = h.telemetry();
    rx.mark_changed();
    let events = futures::stream::unfold(rx, |mut rx| async move {
        rx.changed().await.ok()?;
        let snap = *rx.borrow_and_update();
        let data = serde_json::to_string(&snap).expect("snapshot serializes");
        Some((Ok(Event::default().data(data)), rx))
    });
    Sse::new(events).keep_alive(KeepAlive::new().interval(Duration::from_secs(5)))
}
