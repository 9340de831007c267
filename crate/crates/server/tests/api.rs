mod common;

use std::time::{Duration, Instant};

use axum::http::StatusCode;
use common::*;
use hintwalk_server::{router, ServerConfig};
use serde_json::json;

#[tokio::test]
async fn apps_are_listed_in_name_order() {
    let app = router(state());
    let (status, v) = call(&app, "GET", "/apps", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|a| a["app_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["money-tracker", "synth-03"]);
    assert_eq!(v[0]["screens"], 8);
    assert_eq!(v[0]["entry"], "home");
}

#[tokio::test]
async fn create_returns_the_entry_screen_and_plan() {
    let app = router(state());
    let (status, v) = create(&app, json!({ "app_id": "money-tracker" })).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    assert_eq!(v["app_id"], "money-tracker");
    assert_eq!(v["screen"]["screen_id"], "home");
    assert_eq!(v["screen"]["state"], "home");
    assert_eq!(v["plan"]["strategy"], "exact");
    assert!(v["plan"]["total_steps"].as_u64().unwrap() >= 7);
    // hints wait for the idle threshold by default
    assert!(v["screen"]["hint"].is_null());
    let visited = v["screen"]["visited"].as_object().unwrap();
    assert_eq!(visited.len(), 8);
    assert_eq!(visited.values().filter(|b| b.as_bool().unwrap()).count(), 1);

    let (_, second) = create(&app, json!({ "app_id": "money-tracker" })).await;
    assert_ne!(second["session_id"], v["session_id"]);
}

#[tokio::test]
async fn create_errors_map_to_statuses() {
    let app = router(state());
    let (status, v) = create(&app, json!({ "app_id": "nope" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "not-found");

    let (status, v) = create(&app, json!({ "app_id": "synth-03", "options": { "exact_only": true } })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert!(v["reason"].as_str().unwrap().contains("exact planning limit"), "{v}");

    // the same app is fine once the greedy fallback is allowed
    let (status, v) = create(&app, json!({ "app_id": "synth-03" })).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["plan"]["strategy"], "greedy");

    let (status, _) = create(&app, json!({ "app": "money-tracker" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = create(&app, json!({ "app_id": "money-tracker", "options": { "turbo": 1 } })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn stale_ids_are_not_found() {
    let app = router(state());
    for (method, uri) in [
        ("GET", "/sessions/s999999/screen"),
        ("GET", "/sessions/s999999/metrics"),
        ("GET", "/sessions/s999999/events"),
        ("GET", "/sessions/s999999/log"),
        ("POST", "/sessions/s999999/hint"),
    ] {
        assert_eq!(call(&app, method, uri, None).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    let body = json!({ "component_id": "x", "action_kind": "click" });
    assert_eq!(call(&app, "POST", "/sessions/s999999/actions", Some(body)).await.0, StatusCode::NOT_FOUND);
}

async fn always_on(app: &axum::Router) -> String {
    let (_, v) = create(app, json!({ "app_id": "money-tracker", "options": { "hint_mode": "always-on" } })).await;
    v["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn hinted_action_stays_on_plan_and_off_hint_action_replans() {
    let state = state();
    let app = router(state.clone());
    let sid = always_on(&app).await;
    let (_, screen) = call(&app, "GET", &format!("/sessions/{sid}/screen"), None).await;
    let hint = &screen["hint"];
    assert!(!hint.is_null());
    // the overlay sits exactly on a rendered component
    let comp = screen["components"].as_array().unwrap().iter().find(|c| c["id"] == hint["component_id"]).unwrap();
    assert_eq!(comp["bounds"], hint["bounds"]);

    let v = act(&app, &sid, hint["component_id"].as_str().unwrap(), hint["action_kind"].as_str().unwrap()).await;
    assert_eq!(v["update"]["deviated"], false);
    assert_eq!(v["update"]["replanned"], false);
    assert_eq!(v["bound"], true);
    assert_eq!(v["screen"]["state"], hint["expected_target"]);
    assert_eq!(v["metrics"]["steps"], 1);

    // now pick a bound move that is neither the hint nor a stay-put
    let here = v["screen"]["screen_id"].as_str().unwrap().to_string();
    let next = v["screen"]["hint"].clone();
    let model = &state.apps["money-tracker"].model;
    let off = model
        .rules
        .iter()
        .find(|r| r.screen_id == here && r.target != here && r.target != next["expected_target"].as_str().unwrap())
        .expect("an off-plan move");
    let v = act(&app, &sid, &off.component_id, off.action_kind.as_str()).await;
    assert_eq!(v["update"]["deviated"], true);
    assert_eq!(v["update"]["replanned"], true);
    assert_eq!(v["screen"]["screen_id"], off.target.as_str());
}

#[tokio::test]
async fn unbound_action_keeps_the_screen_and_counts_a_step() {
    let app = router(state());
    let sid = always_on(&app).await;
    let (_, before) = call(&app, "GET", &format!("/sessions/{sid}/screen"), None).await;
    let v = act(&app, &sid, "no_such_button", "click").await;
    assert_eq!(v["bound"], false);
    assert_eq!(v["update"]["deviated"], false);
    assert_eq!(v["screen"]["screen_id"], before["screen_id"]);
    assert_eq!(v["screen"]["hint"], before["hint"]);
    assert_eq!(v["metrics"]["steps"], 1);
    let (_, m) = call(&app, "GET", &format!("/sessions/{sid}/metrics"), None).await;
    assert_eq!(m["steps"], 1);
}

#[tokio::test]
async fn malformed_actions_are_rejected() {
    let app = router(state());
    let sid = always_on(&app).await;
    let uri = format!("/sessions/{sid}/actions");
    for body in [
        json!({ "component_id": "x" }),
        json!({ "component_id": "x", "action_kind": "swipe" }),
        json!({ "component_id": "", "action_kind": "click" }),
    ] {
        let (status, v) = call(&app, "POST", &uri, Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body} -> {v}");
    }
    let (_, m) = call(&app, "GET", &format!("/sessions/{sid}/metrics"), None).await;
    assert_eq!(m["steps"], 0);
}

#[tokio::test]
async fn repeated_gesture_ids_apply_once() {
    let app = router(state());
    let sid = always_on(&app).await;
    let uri = format!("/sessions/{sid}/actions");
    let body = json!({ "component_id": "add_expense", "action_kind": "click", "gesture_id": "g-1" });
    let (_, first) = call(&app, "POST", &uri, Some(body.clone())).await;
    let (_, again) = call(&app, "POST", &uri, Some(body)).await;
    assert_eq!(first, again);
    let (_, m) = call(&app, "GET", &format!("/sessions/{sid}/metrics"), None).await;
    assert_eq!(m["steps"], 1);
}

#[tokio::test]
async fn following_every_hint_finishes_at_full_coverage() {
    let app = router(state());
    let (_, created) = create(&app, json!({ "app_id": "money-tracker", "options": { "hint_mode": "always-on" } })).await;
    let sid = created["session_id"].as_str().unwrap().to_string();
    let planned = created["plan"]["total_steps"].as_u64().unwrap();
    let mut screen = created["screen"].clone();
    while !screen["done"].as_bool().unwrap() {
        let h = &screen["hint"];
        let v = act(&app, &sid, h["component_id"].as_str().unwrap(), h["action_kind"].as_str().unwrap()).await;
        assert_eq!(v["update"]["deviated"], false);
        screen = v["screen"].clone();
    }
    assert!(screen["hint"].is_null());
    assert!(screen["visited"].as_object().unwrap().values().all(|b| b == true));
    let (_, m) = call(&app, "GET", &format!("/sessions/{sid}/metrics"), None).await;
    assert_eq!(m["steps"].as_u64().unwrap(), planned);
    assert_eq!(m["state_coverage"], 1.0);
    assert_eq!(m["activity_coverage"], 1.0);
}

#[tokio::test]
async fn idle_threshold_gates_the_hint() {
    let state = state();
    let app = router(state.clone());
    let (_, v) = create(&app, json!({ "app_id": "money-tracker" })).await;
    let sid = v["session_id"].as_str().unwrap().to_string();
    let uri = format!("/sessions/{sid}/screen");

    state.sweep(Instant::now() + Duration::from_millis(4500));
    assert!(call(&app, "GET", &uri, None).await.1["hint"].is_null());

    state.sweep(Instant::now() + Duration::from_secs(6));
    let (_, screen) = call(&app, "GET", &uri, None).await;
    assert!(!screen["hint"].is_null());
    let entry = state.session(&sid).unwrap();
    let kinds: Vec<&str> = entry.live.lock().unwrap().events.iter().map(|e| e.kind).collect();
    assert_eq!(kinds, ["state-change", "metrics", "hint"]);

    // a second sweep does not repeat the hint, and acting hides it again
    state.sweep(Instant::now() + Duration::from_secs(7));
    assert_eq!(entry.live.lock().unwrap().events.len(), 3);
    let h = &screen["hint"];
    let v = act(&app, &sid, h["component_id"].as_str().unwrap(), h["action_kind"].as_str().unwrap()).await;
    assert!(v["screen"]["hint"].is_null());
}

#[tokio::test]
async fn demo_button_reveals_the_hint_now() {
    let app = router(state());
    let (_, v) = create(&app, json!({ "app_id": "money-tracker" })).await;
    let sid = v["session_id"].as_str().unwrap().to_string();
    let (status, v) = call(&app, "POST", &format!("/sessions/{sid}/hint"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(!v["hint"].is_null());
    let (_, screen) = call(&app, "GET", &format!("/sessions/{sid}/screen"), None).await;
    assert_eq!(screen["hint"], v["hint"]);
}

#[tokio::test]
async fn expired_sessions_persist_their_log() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServerConfig { session_ttl_secs: 60, log_dir: Some(dir.path().to_path_buf()), ..ServerConfig::default() };
    let state = state_with(config);
    let app = router(state.clone());
    let sid = always_on(&app).await;
    act(&app, &sid, "add_expense", "click").await;
    assert_eq!(call(&app, "GET", &format!("/sessions/{sid}/log"), None).await.0, StatusCode::OK);

    state.sweep(Instant::now() + Duration::from_secs(30));
    assert_eq!(state.session_count(), 1);
    state.sweep(Instant::now() + Duration::from_secs(61));
    assert_eq!(state.session_count(), 0);
    assert_eq!(call(&app, "GET", &format!("/sessions/{sid}/screen"), None).await.0, StatusCode::NOT_FOUND);

    let text = std::fs::read_to_string(dir.path().join(format!("{sid}.ndjson"))).unwrap();
    let kinds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds.first().map(String::as_str), Some("start"));
    assert!(kinds.iter().any(|k| k == "action"));
}
