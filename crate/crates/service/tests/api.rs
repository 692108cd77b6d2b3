use std::collections::BTreeSet;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use insectbench_core::navigator::{CommandMode, PathSpec, SessionConfig, SessionLog, TeleopSession};
use insectbench_service::{router, spawn, LiveConfig, SessionHandle};
use serde_json::Value;
use tower::ServiceExt;

fn start(max_duration_s: f64, time_scale: f64, log_path: Option<std::path::PathBuf>) -> (SessionHandle, std::thread::JoinHandle<SessionLog>) {
    let cfg = SessionConfig {
        max_duration_s,
        ..SessionConfig::default()
    }
    .with_seed(9);
    let session = TeleopSession::new(cfg, PathSpec::s_course(), CommandMode::Console).unwrap();
    spawn(
        session,
        LiveConfig {
            time_scale,
            log_path,
            ..LiveConfig::default()
        },
    )
    .unwrap()
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map(|b| Body::from(b.to_owned())).unwrap_or_default()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn wait_until(h: &SessionHandle, t: f64) {
    let mut rx = h.state_updates();
    while rx.borrow_and_update().status.snapshot.t < t {
        rx.changed().await.unwrap();
    }
}

#[tokio::test]
async fn path_and_state_endpoints() {
    let (h, join) = start(60.0, 1.0, None);
    let app = router(h.clone(), None);

    let (status, path) = call(&app, "GET", "/path", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(path["waypoints"].as_array().unwrap().len(), 50);
    let first = &path["waypoints"][0];
    assert_eq!(first[0], -500.0);
    assert!(first[1].as_f64().unwrap().abs() < 1e-9);

    let (status, state) = call(&app, "GET", "/state", None).await;
    assert_eq!(status, StatusCode::OK);
    for key in ["t", "x", "y", "heading", "v", "omega", "stim", "cross_track_mm", "progress_mm", "link", "finished"] {
        assert!(state.get(key).is_some(), "{key} missing from {state}");
    }
    assert_eq!(state["finished"], false);
    assert!(state["stim"].is_null());

    h.shutdown();
    join.join().unwrap();
}

#[tokio::test]
async fn command_validation_and_refractory() {
    let (h, join) = start(60.0, 1.0, None);
    let app = router(h.clone(), None);

    let (status, _) = call(&app, "POST", "/command", Some(r#"{"kind":"UP"}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "POST", "/command", Some("{kind")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, body) = call(&app, "POST", "/command", Some(r#"{"kind":"LEFT"}"#)).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{body}");
    assert_eq!(body["kind"], "LEFT");
    let (status, body) = call(&app, "POST", "/command", Some(r#"{"kind":"RIGHT"}"#)).await;
    assert_eq!(status, StatusCode::TOO_MANY_REQUESTS);
    let remaining = body["remaining_s"].as_f64().unwrap();
    assert!(remaining > 0.5 && remaining <= 1.5, "{remaining}");

    let log = h.log().await.unwrap();
    assert_eq!(log.frames.len(), 1);
    h.shutdown();
    join.join().unwrap();
}

#[tokio::test]
async fn one_press_is_one_applied_stimulus() {
    let (h, join) = start(60.0, 10.0, None);
    let app = router(h.clone(), None);
    let (status, body) = call(&app, "POST", "/command", Some(r#"{"kind":"ACCEL"}"#)).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let sent = body["t"].as_f64().unwrap();
    // nominal 20 ms latency, at most a few jitter sigmas
    wait_until(&h, sent + 0.2).await;

    let log = h.log().await.unwrap();
    assert_eq!(log.frames.len(), 1);
    assert_eq!(log.events.len(), 1);
    assert_eq!(log.events[0].kind, insectbench_core::stimgen::StimKind::Accel);
    assert_eq!(log.stats.frames_decoded, 1);

    let (status, summary) = call(&app, "GET", "/summary", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["metrics"]["commands"], 1);
    assert_eq!(summary["stats"]["delivered"], 1);
    assert!(summary["locomotion"]["accel"].is_object());

    h.shutdown();
    let final_log = join.join().unwrap();
    assert_eq!(final_log.events, log.events);
}

#[tokio::test]
async fn stream_is_decimated_telemetry() {
    let (h, join) = start(60.0, 4.0, None);
    let app = router(h.clone(), None);
    let req = Request::builder().uri("/stream").body(Body::empty()).unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/event-stream");

    let mut body = resp.into_body();
    let mut buf = String::new();
    let mut frames: Vec<Value> = Vec::new();
    while frames.len() < 6 {
        let frame = tokio::time::timeout(Duration::from_secs(5), body.frame()).await.unwrap().unwrap().unwrap();
        if let Ok(data) = frame.into_data() {
            buf.push_str(std::str::from_utf8(&data).unwrap());
        }
        while let Some(end) = buf.find("\n\n") {
            let chunk: String = buf.drain(..end + 2).collect();
            for line in chunk.lines() {
                if let Some(json) = line.strip_prefix("data: ") {
                    frames.push(serde_json::from_str(json).unwrap());
                }
            }
        }
    }
    let expected: BTreeSet<&str> = ["t", "x", "y", "heading", "v", "omega", "stim"].into();
    for f in &frames {
        let keys: BTreeSet<&str> = f.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, expected);
    }
    let ts: Vec<f64> = frames.iter().map(|f| f["t"].as_f64().unwrap()).collect();
    for w in ts.windows(2) {
        assert!(w[1] > w[0]);
    }
    for t in &ts {
        let k = t / 0.05;
        assert!((k - k.round()).abs() < 1e-6, "{t} is off the 20 Hz grid");
    }
    h.shutdown();
    join.join().unwrap();
}

#[tokio::test]
async fn finished_session_rejects_commands_and_writes_log() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("live.json");
    let (h, join) = start(0.5, 20.0, Some(log_path.clone()));
    let app = router(h.clone(), None);
    let mut rx = h.state_updates();
    while !rx.borrow_and_update().finished {
        rx.changed().await.unwrap();
    }
    let (status, _) = call(&app, "POST", "/command", Some(r#"{"kind":"LEFT"}"#)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, state) = call(&app, "GET", "/state", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["t"], 0.5);

    h.shutdown();
    let log = join.join().unwrap();
    assert_eq!(log.ticks, 50);
    let written = SessionLog::from_json(&std::fs::read_to_string(&log_path).unwrap()).unwrap();
    assert_eq!(written.trace_file.as_deref(), Some("live.json.trace.csv"));
    let trace = std::fs::read_to_string(dir.path().join("live.json.trace.csv")).unwrap();
    assert_eq!(insectbench_core::navigator::sha256_hex(&trace), written.trace_sha256);

    let (status, _) = call(&app, "GET", "/summary", None).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn static_assets_are_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>console</h1>").unwrap();
    let (h, join) = start(60.0, 1.0, None);
    let app = router(h.clone(), Some(dir.path().to_owned()));
    let req = Request::builder().uri("/index.html").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&body[..], b"<h1>console</h1>");
    let (status, _) = call(&app, "GET", "/state", None).await;
    assert_eq!(status, StatusCode::OK);
    h.shutdown();
    join.join().unwrap();
}
