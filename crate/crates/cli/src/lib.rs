//! Command-line front end: run, sweep and compare scenarios, export the
//! bundled ones, and serve the teleoperation bridge.

pub mod args;
pub mod commands;
pub mod report;
pub mod svg;

pub use args::Cli;
pub use commands::execute;
