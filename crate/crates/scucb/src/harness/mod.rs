//! Config-driven experiment runner: builds instances, runs
//! policy x strategy x oracle combinations over seeds, aggregates, and emits
//! CSV/JSON results.

mod config;
mod report;
mod runner;

pub use config::{
    BudgetRule, DistributionConfig, ExperimentConfig, FamilyConfig, OracleConfig, StrategyKind,
};
pub use report::{
    emit_csv, emit_json, summarize, CellSummary, EnvFingerprint, RunRecord, RunSummary,
};
pub use runner::{
    build_instance, run_all, run_single, run_sweep, RunOutput, SweepAxis, SweepResult,
};
