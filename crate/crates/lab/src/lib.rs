//! Scenario registry, dyadic sweeps and reports on top of `scl-core`.

pub mod fit;
pub mod report;
pub mod scenarios;
pub mod spec;

pub use report::{emit_report, Format, SweepReport};
pub use scenarios::{run_scenario, LabError};
pub use spec::{default_spec, Defaults, ScenarioName, ScenarioSpec};
