//! Session service over the symenv core, plus the `symenv` command line.

pub mod api;
pub mod client;
pub mod config;
pub mod routes;
pub mod session;

pub use config::Config;
pub use routes::{router, AppState};
pub use session::Store;
