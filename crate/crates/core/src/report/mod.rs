//! Batch front end: experiment configs, audit runs and report files.

mod config;
mod records;
mod runner;

pub use config::{
    AuditSpec, DataSpec, EmbeddingRow, Experiment, ExperimentConfig, Figure1Spec, Flavor, InlineComparison, ModelSpec,
    OutputSpec, PairSpec, ReferenceRow, RegularizerSpec,
};
pub use records::{
    emit_report, format_f64, parse_report, read_csv, read_jsonl, write_csv, write_jsonl, AuditRecord, Format,
    ReportRow, StepTraceRecord, SCHEMA_VERSION,
};
pub use runner::{
    check_lemma, run_audits, run_config, run_figure1_analog, run_figure1_config, AuditRun, LemmaSummary, RunOptions,
    RunOutcome,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PREFMONO_OUT_DIR";
