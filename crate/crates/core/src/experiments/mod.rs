//! Parameter sweeps over a benchmark suite, their paired statistical
//! analysis and the written reports.

mod analysis;
mod report;
mod sweep;

pub use analysis::{analyze, AnalysisOptions, Comparison, GroupReport, Metric, StatReport};
pub use report::{boxplot_csv, emit_report, per_instance_markdown, report_csv, report_markdown, ReportFormat};
pub use sweep::{
    config_hash, feasible_configs, run_sweep, BeamOption, ResultRow, ResultsTable, SweepKind, SweepSpec, Variant,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("sweep spec: {0}")]
    Spec(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("thread pool: {0}")]
    Pool(String),
}
