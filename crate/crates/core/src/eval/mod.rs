//! Benchmark suites, success-rate reports, and failure classification.

mod classify;
mod report;
mod scenario;
mod suite;


pub use classify::{classify_failure, ClassifyError, FailureCategory, CONTESTED_TICKS, LOOP_VISITS, STATE_HITS};
pub use report::{
    aggregate, mean_std, render_table, BenchmarkReport, EpisodeSummary, ReportRow, Table, TableRow, REPORT_SCHEMA_VERSION,
};
pub use scenario::{household, household_base, paired_task, single_agent, HouseholdTask};
pub use suite::{prepare, run_benchmark, run_cell, BenchmarkSuite, Budget, PolicyKind, Prepared, Scenario, SuiteError, TaskDef};
