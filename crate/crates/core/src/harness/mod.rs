//! Seeded risk experiments, power-law rate fits, Assouad lower-bound reports and report files.

mod config;
mod experiment;
mod lower_bound;
mod rate;
mod report;

pub use config::{Estimator, Metric, RiskExperimentConfig, TruthSpec};
pub use experiment::{
    class_exit_fraction, fit_replication, replication_seed, run_risk_experiment, supremum_risk, ClassExitReport,
    ReplicationFailure, RiskPoint, RiskResult, SupremumRiskRow, MAX_FAILURE_FRACTION,
};
pub use lower_bound::{lower_bound_report, minimax_constant, minimax_rate, LowerBoundReport, LowerBoundRow};
pub use rate::{fit_rate, RateFit};
pub use report::{emit_report, from_json, render, to_csv, to_json, to_svg, ReportFormat};
