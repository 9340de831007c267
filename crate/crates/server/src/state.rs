//! Loaded apps, live sessions and the background idle/expiry sweep.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use hintwalk::guidance::{GuidanceSession, HintMode, NextHint, Observation, SessionConfig, SessionUpdate};
use hintwalk::hierarchy::HierarchyNode;
use hintwalk::planner::{PlanError, PlannerConfig};
use hintwalk::sim::{render_screen, AppModel};
use hintwalk::stg::ActionKind;
use hintwalk::StgGraph;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::watch;

use crate::config::ServerConfig;

/// An app model with the graph sessions are planned on.
#[derive(Debug)]
pub struct LoadedApp {
    pub model: AppModel,
    pub graph: StgGraph,
}

/// Options accepted when a session is created.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionOptions {
    /// Fail instead of falling back to the greedy planner.
    pub exact_only: bool,
    pub relaunch_cost: Option<u32>,
    pub hint_mode: Option<HintMode>,
    pub content_seed: Option<u64>,
}

/// One entry of a session's push stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamEvent {
    pub index: u64,
    pub kind: &'static str,
    pub data: Value,
}

#[derive(Debug)]
pub struct Live {
    pub guidance: GuidanceSession,
    pub screen_id: String,
    pub hierarchy: HierarchyNode,
    renders: u64,
    content_seed: u64,
    /// Set when the current hint has been surfaced (idle or always-on).
    pub hint_shown: bool,
    last_action: Instant,
    pub events: Vec<StreamEvent>,
    gestures: HashMap<String, Value>,
    /// Set once the session has expired; streams end after draining.
    pub closed: bool,
}

impl Live {
    fn push(&mut self, kind: &'static str, data: Value) {
        let index = self.events.len() as u64;
        self.events.push(StreamEvent { index, kind, data });
    }

    pub fn gesture(&self, key: &str) -> Option<&Value> {
        self.gestures.get(key)
    }

    pub fn remember_gesture(&mut self, key: String, response: Value) {
        self.gestures.insert(key, response);
    }
}

#[derive(Debug)]
pub struct SessionEntry {
    pub id: String,
    pub app_id: String,
    pub created_at_ms: u64,
    pub live: Mutex<Live>,
    notify: watch::Sender<u64>,
}

impl SessionEntry {
    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.notify.subscribe()
    }

    fn publish(&self, live: &Live) {
        self.notify.send_replace(live.events.len() as u64);
    }
}

pub struct ActionOutcome {
    pub update: SessionUpdate,
    pub bound: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CreateError {
    #[error("unknown app `{0}`")]
    UnknownApp(String),
    #[error("{0}")]
    Plan(#[from] hintwalk::guidance::SessionError),
}

impl CreateError {
    pub fn is_exact_limit(&self) -> bool {
        matches!(
            self,
            CreateError::Plan(hintwalk::guidance::SessionError::Plan(PlanError::ExactLimitExceeded { .. }))
        )
    }
}

#[derive(Debug)]
pub struct AppState {
    pub config: ServerConfig,
    pub apps: BTreeMap<String, LoadedApp>,
    sessions: RwLock<HashMap<String, Arc<SessionEntry>>>,
    next_id: AtomicU64,
}

fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or_default()
}

impl AppState {
    /// Loads every app model in the configured directory.
    pub fn load(config: ServerConfig) -> Result<Self, hintwalk::bench::BenchError> {
        let models = hintwalk::bench::load_apps(&config.apps)?;
        let mut apps = BTreeMap::new();
        for model in models {
            match model.to_stg() {
                Ok(graph) => {
                    apps.insert(model.name.clone(), LoadedApp { model, graph });
                }
                Err(e) => log::warn!("skipping app {}: {e}", model.name),
            }
        }
        log::info!("loaded {} apps from {}", apps.len(), config.apps.display());
        Ok(Self::with_apps(config, apps))
    }

    pub fn with_apps(config: ServerConfig, apps: BTreeMap<String, LoadedApp>) -> Self {
        Self { config, apps, sessions: RwLock::new(HashMap::new()), next_id: AtomicU64::new(1) }
    }

    pub fn session(&self, id: &str) -> Option<Arc<SessionEntry>> {
        self.sessions.read().expect("session table").get(id).cloned()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session table").len()
    }

    pub fn create_session(&self, app_id: &str, opts: &SessionOptions) -> Result<Arc<SessionEntry>, CreateError> {
        let app = self.apps.get(app_id).ok_or_else(|| CreateError::UnknownApp(app_id.to_string()))?;
        let planner = PlannerConfig {
            exact_limit: self.config.exact_limit,
            relaunch_cost: opts.relaunch_cost,
            heuristic_fallback: !opts.exact_only,
        };
        let cfg = SessionConfig {
            idle_threshold: self.config.idle_threshold(),
            hint_mode: opts.hint_mode.unwrap_or(HintMode::AfterIdle),
            planner,
            ..SessionConfig::default()
        };
        let guidance = GuidanceSession::create(&app.graph, &app.model.entry, cfg)?;
        let content_seed = opts.content_seed.unwrap_or(app.model.content_seed);
        let screen_id = app.model.entry.clone();
        let hierarchy = render(&app.model, &screen_id, content_seed, 0);

        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let id = format!("s{n:06}");
        let mut live = Live {
            hint_shown: cfg.hint_mode == HintMode::AlwaysOn,
            guidance,
            screen_id,
            hierarchy,
            renders: 1,
            content_seed,
            last_action: Instant::now(),
            events: Vec::new(),
            gestures: HashMap::new(),
            closed: false,
        };
        live.push("state-change", json!({ "state": live.guidance.current(), "screen": live.screen_id }));
        live.push("metrics", json!(live.guidance.metrics()));
        let (notify, _) = watch::channel(live.events.len() as u64);
        let entry = Arc::new(SessionEntry {
            id: id.clone(),
            app_id: app_id.to_string(),
            created_at_ms: unix_ms(),
            live: Mutex::new(live),
            notify,
        });
        self.sessions.write().expect("session table").insert(id, Arc::clone(&entry));
        Ok(entry)
    }

    /// Performs one tester action on the session's simulated app.
    pub fn apply(&self, entry: &SessionEntry, live: &mut Live, component: &str, kind: ActionKind) -> ActionOutcome {
        let app = &self.apps[&entry.app_id].model;
        let target = app.lookup(&live.screen_id, component, kind).map(str::to_string);
        let bound = target.is_some();
        if let Some(target) = target {
            live.hierarchy = render(app, &target, live.content_seed, live.renders);
            live.renders += 1;
            live.screen_id = target;
        } else {
            log::debug!("session {}: {component} ({kind}) is unbound on {}", entry.id, live.screen_id);
        }
        let activity = app.screen(&live.screen_id).expect("validated app").activity.clone();
        let was_done = live.guidance.is_done();
        let obs = Observation::new(activity, live.hierarchy.clone()).via(component, kind);
        let update = live.guidance.apply_action(&obs);
        live.last_action = Instant::now();
        live.hint_shown = live.guidance.config().hint_mode == HintMode::AlwaysOn;

        live.push(
            "state-change",
            json!({
                "state": update.matched,
                "screen": live.screen_id,
                "component": component,
                "action_kind": kind,
                "bound": bound,
                "deviated": update.deviated,
                "provisional": update.provisional,
            }),
        );
        if update.replanned {
            let plan = live.guidance.plan();
            live.push(
                "replanned",
                json!({ "from": plan.start, "total_steps": plan.total_steps, "strategy": plan.strategy }),
            );
        }
        live.push("metrics", json!(live.guidance.metrics()));
        if live.guidance.is_done() && !was_done {
            live.push("done", json!(live.guidance.metrics()));
        }
        entry.publish(live);
        ActionOutcome { update, bound }
    }

    /// Emits idle hints and expires stale sessions, judged at `now`.
    pub fn sweep(&self, now: Instant) {
        let sessions: Vec<Arc<SessionEntry>> = self.sessions.read().expect("session table").values().cloned().collect();
        let mut expired = Vec::new();
        for entry in sessions {
            let mut live = entry.live.lock().expect("session lock");
            let idle = now.saturating_duration_since(live.last_action);
            if idle >= self.config.session_ttl() {
                expired.push(Arc::clone(&entry));
                continue;
            }
            if live.hint_shown {
                continue;
            }
            if let Some(hint) = live.guidance.idle_tick(idle) {
                live.hint_shown = true;
                live.push("hint", json!(hint));
                entry.publish(&live);
            }
        }
        for entry in expired {
            self.expire(&entry);
        }
    }

    fn expire(&self, entry: &SessionEntry) {
        self.sessions.write().expect("session table").remove(&entry.id);
        let mut live = entry.live.lock().expect("session lock");
        live.closed = true;
        entry.publish(&live);
        log::info!("session {} expired after {} steps", entry.id, live.guidance.steps_taken());
        if let Some(dir) = &self.config.log_dir {
            let path: PathBuf = dir.join(format!("{}.ndjson", entry.id));
            if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, live.guidance.event_log_ndjson())) {
                log::error!("cannot persist log of session {}: {e}", entry.id);
            }
        }
    }

    /// Surfaces the current hint immediately, as the demo button does.
    pub fn reveal_hint(entry: &SessionEntry, live: &mut Live) -> Option<hintwalk::guidance::Hint> {
        let hint = match live.guidance.next_hint() {
            NextHint::Hint(h) => h,
            NextHint::Done => return None,
        };
        if !live.hint_shown {
            live.hint_shown = true;
            live.push("hint", json!(hint));
            entry.publish(live);
        }
        Some(hint)
    }

    /// Current hint if it may be shown now.
    pub fn visible_hint(live: &mut Live) -> Option<hintwalk::guidance::Hint> {
        if !live.hint_shown {
            return None;
        }
        match live.guidance.next_hint() {
            NextHint::Hint(h) => Some(h),
            NextHint::Done => None,
        }
    }
}

fn render(app: &AppModel, screen_id: &str, content_seed: u64, renders: u64) -> HierarchyNode {
    let seed = content_seed.wrapping_add(renders.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    render_screen(app, screen_id, seed).expect("screens come from validated rules")
}

/// Spawns the periodic sweep on the current runtime.
pub fn spawn_sweeper(state: Arc<AppState>, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            state.sweep(Instant::now());
        }
    })
}
