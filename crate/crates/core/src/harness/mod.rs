//! Scenario runner, diagnostics and exports.

pub mod acceptance;
pub mod checks;
pub mod config;
pub mod crossval;
pub mod export;
pub mod fits;
pub mod scenario;

pub use checks::Check;
pub use config::{Mode, Preset, ScenarioConfig};
pub use scenario::{run_scenario, RunSummary};
