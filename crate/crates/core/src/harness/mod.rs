//! Experiment plans, parallel execution and CSV output.

mod output;
mod plan;
mod run;

pub use output::{
    emit_csv, file_stem, fit_report, fit_through_origin, fmt_f64, read_series_csv, FitReport, LONG_TERM_HEADER,
    NON_SCALING_FRACTION, PROTECTION_HEADER, SERIES_HEADER,
};
pub use plan::{
    named_plan, plus_minus_coeffs, ExperimentPlan, GridPoint, OutputKind, PlanOptions, ProtectionSettings, TimeGrid,
    FIG1_ALPHA_SQ, PLAN_NAMES,
};
pub use run::{resolve_workers, run_experiment, RunRecord, DEFAULT_POINT_MEMORY, TOOL_VERSION};
