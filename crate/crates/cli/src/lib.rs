//! Scenario files, experiment drivers and output formats for the `magrav` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod output;
pub mod run;
pub mod scenario;

pub use output::{write_outputs, Bundle};
pub use run::{manifest, run_experiment, RunError, RunOutput, MANIFEST};
pub use scenario::{load_scenario, Experiment, Scenario, ScenarioError};
