use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::Args;

/// Service settings; every flag can also come from the environment.
#[derive(Debug, Clone, Args)]
pub struct ServerConfig {
    /// Address to listen on.
    #[arg(long, env = "HINTWALK_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    /// Directory of app model files (`*.json`).
    #[arg(long, env = "HINTWALK_APPS", default_value = "apps")]
    pub apps: PathBuf,
    /// Seconds a tester must idle on a page before a hint is pushed.
    #[arg(long, env = "HINTWALK_IDLE_SECS", default_value_t = 5.0)]
    pub idle_secs: f64,
    /// Largest state count planned exactly.
    #[arg(long, env = "HINTWALK_EXACT_LIMIT", default_value_t = hintwalk::planner::DEFAULT_EXACT_LIMIT)]
    pub exact_limit: usize,
    /// Inactivity after which a session is dropped.
    #[arg(long, env = "HINTWALK_SESSION_TTL_SECS", default_value_t = 1800)]
    pub session_ttl_secs: u64,
    /// Where expired sessions write their event logs.
    #[arg(long, env = "HINTWALK_LOG_DIR")]
    pub log_dir: Option<PathBuf>,
    /// Period of the idle/expiry sweep in milliseconds.
    #[arg(long, env = "HINTWALK_TICK_MS", default_value_t = 250)]
    pub tick_ms: u64,
}

impl ServerConfig {
    pub fn idle_threshold(&self) -> Duration {
        Duration::from_secs_f64(self.idle_secs.max(0.0))
    }

    pub fn session_ttl(&self) -> Duration {
        Duration::from_secs(self.session_ttl_secs)
    }

    pub fn tick(&self) -> Duration {
        Duration::from_millis(self.tick_ms.max(1))
    }
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            apps: PathBuf::from("apps"),
            idle_secs: 5.0,
            exact_limit: hintwalk::planner::DEFAULT_EXACT_LIMIT,
            session_ttl_secs: 1800,
            log_dir: None,
            tick_ms: 250,
        }
    }
}
