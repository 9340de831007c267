//! Drives the session service in-process: list apps, open a session, follow
//! two hints, then read the metrics and the replayable event stream.
//!
//! ```text
//! cargo run -p hintwalk-server --example http_session -- [apps-dir]
//! ```
//! With no directory the bundled fixture apps are served.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use hintwalk_server::{router, AppState, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn send(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    serde_json::from_slice(&bytes).unwrap()
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let apps = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/apps")
    });
    let state = Arc::new(AppState::load(ServerConfig { apps, ..ServerConfig::default() })?);
    let app = router(state);

    let listed = send(&app, "GET", "/apps", None).await;
    let first = listed[0]["app_id"].as_str().ok_or("no apps found")?.to_string();
    println!("{} apps, opening {first}", listed.as_array().map_or(0, Vec::len));

    let created = send(&app, "POST", "/sessions", Some(json!({ "app_id": first, "options": { "hint_mode": "always-on" } }))).await;
    let sid = created["session_id"].as_str().unwrap().to_string();
    println!("session {sid}: plan of {} steps ({})", created["plan"]["total_steps"], created["plan"]["strategy"]);

    let mut screen = created["screen"].clone();
    for _ in 0..2 {
        let hint = &screen["hint"];
        println!("hint: {} at {}", hint["label"], hint["bounds"]);
        let body = json!({ "component_id": hint["component_id"], "action_kind": hint["action_kind"] });
        let step = send(&app, "POST", &format!("/sessions/{sid}/actions"), Some(body)).await;
        println!("  now on {} (deviated={})", step["screen"]["state"], step["update"]["deviated"]);
        screen = step["screen"].clone();
    }
    println!("metrics: {}", send(&app, "GET", &format!("/sessions/{sid}/metrics"), None).await);

    // the stream stays open, so read whatever arrives within a moment
    let req = Request::builder().uri(format!("/sessions/{sid}/events?from=0")).body(Body::empty())?;
    let mut body = app.oneshot(req).await?.into_body();
    while let Ok(Some(Ok(frame))) = tokio::time::timeout(Duration::from_millis(200), body.frame()).await {
        if let Ok(data) = frame.into_data() {
            print!("{}", String::from_utf8_lossy(&data));
        }
    }
    Ok(())
}
