//! Safety filters for velocity-commanded robots.
//!
//! Artificial potential fields ([`apf`]), control barrier function filters
//! ([`cbf`]) and the potential-field barrier that combines them, together
//! with the plants, simulated LIDAR and scenario runner used to compare them.

pub mod apf;
pub mod cbf;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod scenario_file;
pub mod sensing;
pub mod sim;

pub use config::ControllerConfig;
pub use error::{Error, Result};
pub use geometry::{Bounds, Obstacle, Scene, Vector};
pub use sim::{run, ControllerKind, ScenarioSpec, Terminal, TrajectoryLog};
