//! File-backed persistence and an HTTP API for practice sessions.
//!
//! [`store`] keeps templates, handshape libraries, lessons, attempts and
//! session logs as JSON files. [`api`] serves them over HTTP and runs
//! sessions, computing each comparison in-process when a recording arrives.

pub mod api;
pub mod store;

pub use api::{router, AppState, ServiceConfig};
pub use store::{Collection, Store, StoreError};
