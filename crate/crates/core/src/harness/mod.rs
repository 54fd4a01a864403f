//! Instance generation, statistical verification suites, and report
//! emission: the glue that turns the library into runnable experiments.

pub mod generate;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod verify;

pub use pipeline::{build_named_scheme, ExperimentSpec, Pipeline};
pub use generate::{
    generate_feasible_process, generate_instance, generate_procurement, ConstraintKind,
    GeneratorParams,
};
pub use report::{all_pass, emit_report, ReportFormat, SuiteResult};
pub use verify::{
    audit_bic, trial_rng, verify_end_to_end, verify_selectability, BicReport, EndToEndReport,
    SelectabilityReport,
};

// The replayable event log produced by mechanism runs.
pub use crate::mechanism::{RunTrace, TraceEvent};
