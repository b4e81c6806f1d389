//! Scenario setup, run drivers and artifact writers for the `momentlbm`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod scenario;

pub use config::{PrecisionChoice, ScenarioKind, ScenarioSpec, Settings};
