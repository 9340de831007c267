//! HTTP endpoints.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use hintwalk::extraction::resolve_component_id;
use hintwalk::guidance::{Hint, SessionMetrics, SessionUpdate};
use hintwalk::hierarchy::{Bounds, HierarchyNode};
use hintwalk::stg::{ActionKind, ComponentKind, BACK_KEY_BOUNDS};
use hintwalk::StateId;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::state::{AppState, CreateError, Live, SessionEntry, SessionOptions};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    BadRequest(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, "not-found"),
            ApiError::Unprocessable(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unprocessable"),
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad-request"),
        };
        (status, Json(json!({ "error": kind, "reason": self.to_string() }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::BadRequest(r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/apps", get(list_apps))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/screen", get(screen))
        .route("/sessions/{id}/actions", post(post_action))
        .route("/sessions/{id}/hint", post(reveal_hint))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/log", get(event_log))
        .with_state(state)
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<SessionEntry>> {
    state.session(id).ok_or_else(|| ApiError::NotFound(format!("unknown session `{id}`")))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AppSummary {
    pub app_id: String,
    pub entry: String,
    pub screens: usize,
    pub activities: usize,
}

async fn list_apps(State(state): State<Arc<AppState>>) -> Json<Vec<AppSummary>> {
    Json(
        state
            .apps
            .iter()
            .map(|(id, app)| AppSummary {
                app_id: id.clone(),
                entry: app.model.entry.clone(),
                screens: app.model.screens.len(),
                activities: app.graph.activities().len(),
            })
            .collect(),
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub app_id: String,
    #[serde(default)]
    pub options: SessionOptions,
}

#[derive(Debug, Serialize)]
struct PlanSummary {
    total_steps: u64,
    strategy: Value,
    targets: usize,
    uncoverable: Vec<StateId>,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(req) = body?;
    let entry = state.create_session(&req.app_id, &req.options).map_err(|e| match e {
        CreateError::UnknownApp(_) => ApiError::NotFound(e.to_string()),
        CreateError::Plan(_) => ApiError::Unprocessable(e.to_string()),
    })?;
    let mut live = entry.live.lock().expect("session lock");
    let plan = live.guidance.plan();
    let plan = PlanSummary {
        total_steps: plan.total_steps,
        strategy: json!(plan.strategy),
        targets: plan.targets.len(),
        uncoverable: plan.uncoverable.iter().cloned().collect(),
    };
    log::info!("session {} created for {}", entry.id, entry.app_id);
    let body = json!({
        "session_id": entry.id,
        "app_id": entry.app_id,
        "created_at": entry.created_at_ms,
        "plan": plan,
        "screen": screen_view(&entry, &mut live),
    });
    Ok((StatusCode::CREATED, Json(body)))
}

/// A component as the UI draws it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentView {
    pub id: String,
    pub kind: ComponentKind,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub clickable: bool,
    pub long_clickable: bool,
}

/// The hint overlay: where to draw it and what to say.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintView {
    pub component_id: String,
    pub bounds: Bounds,
    pub action_kind: ActionKind,
    pub label: String,
    pub expected_target: StateId,
    pub step_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenView {
    pub session_id: String,
    pub screen_id: String,
    pub state: StateId,
    pub activity: String,
    pub hierarchy: HierarchyNode,
    pub components: Vec<ComponentView>,
    pub hint: Option<HintView>,
    /// Whether each coverage target has been reached.
    pub visited: BTreeMap<StateId, bool>,
    pub done: bool,
}

fn components(h: &HierarchyNode) -> Vec<ComponentView> {
    h.executable_leaves()
        .map(|n| {
            let c = resolve_component_id(n);
            ComponentView {
                id: c.id,
                kind: c.kind,
                bounds: n.bounds.unwrap_or_default(),
                text: n.text.clone(),
                clickable: n.clickable,
                long_clickable: n.long_clickable,
            }
        })
        .collect()
}

fn hint_view(hint: Hint, on_screen: &[ComponentView]) -> HintView {
    let bounds = on_screen
        .iter()
        .find(|c| c.id == hint.component.id)
        .map(|c| c.bounds)
        .or(hint.component.bounds)
        .unwrap_or(BACK_KEY_BOUNDS);
    let label = match hint.action_kind {
        ActionKind::Back => "back".to_string(),
        kind => {
            let what = hint.component.display_text.clone().unwrap_or_else(|| hint.component.id.clone());
            format!("{} {what}", kind.as_str().replace('-', " "))
        }
    };
    HintView {
        component_id: hint.component.id,
        bounds,
        action_kind: hint.action_kind,
        label,
        expected_target: hint.expected_target,
        step_index: hint.step_index,
    }
}

fn screen_view(entry: &SessionEntry, live: &mut Live) -> ScreenView {
    let components = components(&live.hierarchy);
    let hint = AppState::visible_hint(live).map(|h| hint_view(h, &components));
    let g = &live.guidance;
    let visited = g.coverage_universe().into_iter().map(|s| {
        let seen = g.visited_states().contains(&s);
        (s, seen)
    });
    let activity = g.graph().state(g.current().as_str()).map(|s| s.activity.clone()).unwrap_or_default();
    ScreenView {
        session_id: entry.id.clone(),
        screen_id: live.screen_id.clone(),
        state: g.current().clone(),
        activity,
        hierarchy: live.hierarchy.clone(),
        components,
        hint,
        visited: visited.collect(),
        done: g.is_done(),
    }
}

async fn screen(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<ScreenView>> {
    let entry = lookup(&state, &id)?;
    let mut live = entry.live.lock().expect("session lock");
    Ok(Json(screen_view(&entry, &mut live)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRequest {
    pub component_id: String,
    pub action_kind: ActionKind,
    /// Idempotency key; a repeated key returns the first response unchanged.
    #[serde(default)]
    pub gesture_id: Option<String>,
}

#[derive(Debug, Serialize)]
struct ActionResponse {
    update: SessionUpdate,
    bound: bool,
    screen: ScreenView,
    metrics: SessionMetrics,
}

async fn post_action(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<ActionRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let entry = lookup(&state, &id)?;
    let Json(req) = body?;
    if req.component_id.is_empty() {
        return Err(ApiError::BadRequest("component_id must not be empty".into()));
    }
    // one lock for the whole call keeps each session's actions serialized
    let mut live = entry.live.lock().expect("session lock");
    if let Some(previous) = req.gesture_id.as_deref().and_then(|g| live.gesture(g)) {
        return Ok(Json(previous.clone()));
    }
    let outcome = state.apply(&entry, &mut live, &req.component_id, req.action_kind);
    let response = ActionResponse {
        update: outcome.update,
        bound: outcome.bound,
        screen: screen_view(&entry, &mut live),
        metrics: live.guidance.metrics(),
    };
    let value = serde_json::to_value(&response).expect("serializable response");
    if let Some(g) = req.gesture_id {
        live.remember_gesture(g, value.clone());
    }
    Ok(Json(value))
}

async fn reveal_hint(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let entry = lookup(&state, &id)?;
    let mut live = entry.live.lock().expect("session lock");
    let components = components(&live.hierarchy);
    let hint = AppState::reveal_hint(&entry, &mut live).map(|h| hint_view(h, &components));
    Ok(Json(json!({ "hint": hint })))
}

async fn metrics(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionMetrics>> {
    let entry = lookup(&state, &id)?;
    let live = entry.live.lock().expect("session lock");
    Ok(Json(live.guidance.metrics()))
}

#[derive(Debug, Deserialize)]
pub struct EventsQuery {
    /// First event index to deliver.
    pub from: Option<u64>,
}

/// Index to resume from: `?from=` wins, else one past `Last-Event-ID`.
fn resume_index(query: &EventsQuery, headers: &HeaderMap) -> ApiResult<u64> {
    if let Some(from) = query.from {
        return Ok(from);
    }
    match headers.get("last-event-id") {
        None => Ok(0),
        Some(v) => v
            .to_str()
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(|last| last + 1)
            .ok_or_else(|| ApiError::BadRequest("Last-Event-ID must be an event index".into())),
    }
}

async fn events(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<EventsQuery>,
    headers: HeaderMap,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let entry = lookup(&state, &id)?;
    let from = resume_index(&query, &headers)?;
    Ok(Sse::new(event_stream(entry, from)).keep_alive(KeepAlive::default()))
}

/// Replays the session's events from `next`, then follows new ones.
pub fn event_stream(entry: Arc<SessionEntry>, next: u64) -> impl Stream<Item = Result<Event, Infallible>> {
    let rx = entry.subscribe();
    futures::stream::unfold((entry, rx, next), |(entry, mut rx, next)| async move {
        loop {
            let (pending, closed) = {
                let live = entry.live.lock().expect("session lock");
                (live.events.get(next as usize).cloned(), live.closed)
            };
            if let Some(ev) = pending {
                let event = Event::default()
                    .id(ev.index.to_string())
                    .event(ev.kind)
                    .json_data(&ev.data)
                    .expect("event payloads serialize");
                return Some((Ok(event), (entry, rx, next + 1)));
            }
            if closed || rx.changed().await.is_err() {
                return None;
            }
        }
    })
}

async fn event_log(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    let body = entry.live.lock().expect("session lock").guidance.event_log_ndjson();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}
