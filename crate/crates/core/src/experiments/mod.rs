//! Scenario files, the end-to-end twin-experiment pipeline, the table
//! drivers built on it and self-contained verification runs.

mod config;
mod manifest;
mod output;
mod pipeline;
mod tables;
mod verify;

pub use config::{
    DescentSettings, GridSection, OptimizerSection, ScenarioConfig, ScenarioSection,
    SensorsSection, SourceSection,
};
pub use manifest::{scenario_hash, sha256_hex, FileEntry, RunManifest, Seeds, TOOL_VERSION};
pub use output::{
    write_curve, write_estimate, write_experiment, write_report, write_table1, write_table2,
    write_trajectory, ReportWriter, SummaryRow,
};
pub use pipeline::{auto_steps, Estimate, ExperimentOutcome, Optimization, Scenario};
pub use tables::{
    epsilon_psi_curve, seeded_scenario, snapshot_iterations, table1, table1_block, table2, Start,
    Table1Block, Table1Row, Table2, Table2Row, TABLE1_CASES, TABLE2_FREQUENCIES,
};
pub use verify::{
    verify, verify_duality, verify_gradient_phi, verify_gradient_trajectory, VerificationReport,
    VerifyKind,
};
