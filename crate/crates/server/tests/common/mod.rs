#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use hintwalk::sim::AppModel;
use hintwalk::synth::{generate_app, money_tracker};
use hintwalk_server::state::LoadedApp;
use hintwalk_server::{AppState, ServerConfig};
use serde_json::Value;
use tower::ServiceExt;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn loaded(models: Vec<AppModel>) -> BTreeMap<String, LoadedApp> {
    models
        .into_iter()
        .map(|m| {
            let graph = m.to_stg().unwrap();
            (m.name.clone(), LoadedApp { model: m, graph })
        })
        .collect()
}

/// Money tracker plus a 25-screen synthetic app, too big for exact planning.
pub fn state_with(config: ServerConfig) -> Arc<AppState> {
    Arc::new(AppState::with_apps(config, loaded(vec![money_tracker(), generate_app(3, 25)])))
}

pub fn state() -> Arc<AppState> {
    state_with(ServerConfig::default())
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => builder.header("content-type", "application/json").body(Body::from(v.to_string())),
        None => builder.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

pub async fn create(app: &Router, body: Value) -> (StatusCode, Value) {
    call(app, "POST", "/sessions", Some(body)).await
}

pub async fn act(app: &Router, sid: &str, component: &str, kind: &str) -> Value {
    let body = serde_json::json!({ "component_id": component, "action_kind": kind });
    let (status, v) = call(app, "POST", &format!("/sessions/{sid}/actions"), Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v
}
