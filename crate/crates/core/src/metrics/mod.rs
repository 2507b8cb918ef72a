//! Objective quality measures and dataset scoring.

mod report;
mod sisdr;
mod stoi;

pub use report::{
    evaluate_dataset, write_report, MethodOutputs, MethodSummary, SceneScore, ScoreReport, Skipped,
    Summary, REPORT_SCHEMA, UNPROCESSED,
};
pub use sisdr::si_sdr;
pub use stoi::stoi;
