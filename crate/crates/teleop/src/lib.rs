//! Websocket bridge: a pilot sends desired velocities, the bridge filters
//! them through the scan-based CBF, steps a velocity-lag vehicle at a fixed
//! rate and streams the result to every connected client.

pub mod server;
pub mod session;
pub mod wire;

pub use server::{default_port, Bridge, BridgeConfig, BridgeStats, DEFAULT_PORT, PORT_ENV};
pub use session::{Submission, TeleopSession, SCAN_STRIDE};
pub use wire::{CommandMsg, SceneMsg, ServerMsg, StateMsg};
