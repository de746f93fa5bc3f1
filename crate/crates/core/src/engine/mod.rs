//! Correlated default sampling, contagion between periods and the Monte
//! Carlo loss distribution.

mod config;
mod path;
pub mod rng;
mod scenario;
mod simulation;
pub mod update;

pub use config::{CorrelationSpec, SimulationConfig};
pub use path::{run_path, sample_defaults, CorrelatedSampler, Engine, PathOutcome, Workspace};
pub use scenario::{NodeMode, ScenarioOverride};
pub use simulation::{run_scenario, run_simulation, simulate_paths, LossDistribution};
pub use update::{linear_update, merton_update};
