//! Declarative experiment configs and the commands the CLI exposes.

mod commands;
mod config;
mod run;

pub use commands::{
    cmd_compare, cmd_ess, cmd_sample, cmd_verify, ComparisonReport, PairComparison, CONFIG_FILE, DRAWS_FILE,
    NET_FILE, SUMMARY_FILE,
};
pub use config::{DataSpec, ExperimentConfig, OracleSpec, OutputSpec, Precision, SamplerSpec, TargetSpec};
pub use run::{build_target, default_init, execute, BuiltTarget, GpFitSummary, RunOutput, RunSummary, ScheduleSummary};
