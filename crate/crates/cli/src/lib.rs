//! Campaign orchestration on top of `litelfuzz-core`: scenario loading,
//! seeded multi-execution runs, failure statistics and file exports.

pub mod campaign;
pub mod export;

use std::path::Path;

use litelfuzz_core::scenario::{Scenario, ScenarioError};

pub use campaign::{
    run_campaign, run_executions, summarize, CampaignConfig, CampaignError, CampaignReport,
    ExecutionRecord, ExecutionStatus, FailureCounts, FailureSummary,
};
pub use export::{
    emit_report_plot_data, emit_trace_plot_data, export_trace, read_trace, trace_lines, AgentLine,
    ExportError, TraceLine,
};

/// Reads and validates a scenario file; all defaults are applied on load.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    Scenario::load(path)
}
