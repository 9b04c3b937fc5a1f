//! Experiment harness: configuration parsing, run orchestration, bound
//! verification and flat-file result emission.

mod bounds;
mod config;
mod output;
mod run;

pub use bounds::{verify_bounds, BoundCheckResult, BoundReport, SkippedBound};
pub use config::{
    build_config, parse_config, parse_entries, ExperimentConfig, MetricName, OutputFormat,
    ProblemRef,
};
pub use output::{
    emit_plot_data, fmt_float, write_trace_csv, write_trace_json, TraceRow, TRACE_HEADER,
};
pub use run::{run_experiment, CellResult, ExperimentOutcome};
