//! Session service and command-line front end for `hintwalk`.
//!
//! [`api::router`] serves guidance sessions over HTTP with a server-sent
//! event stream per session; [`commands`] holds the `hintwalk` subcommands.

pub mod api;
pub mod commands;
pub mod config;
pub mod state;

pub use api::router;
pub use config::ServerConfig;
pub use state::AppState;
