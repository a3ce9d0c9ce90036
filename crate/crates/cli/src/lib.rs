//! Batch front end for the `extphase` toolkit: scenario configuration,
//! artifact emission with a hashed manifest, plots, and the verification
//! table.

pub mod config;
pub mod error;
pub mod plot;
pub mod scenario;
pub mod table;
pub mod verify;

pub use config::ScenarioConfig;
pub use error::CliError;
pub use scenario::{run_scenario, write_artifacts, Artifact, Command, Manifest};
