//! Benchmark harness for the NLM and MK-NLM denoisers: experiment configs,
//! deterministic noise seeding, calibration of `h`, and CSV/Markdown reports.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod seed;

pub use calibrate::{calibrate_h, Calibration};
pub use config::{ExperimentConfig, FilterKind, FilterSpec, HSetting, ImageEntry};
pub use error::{BenchError, Result};
pub use experiment::{run_and_persist, run_experiment, run_filter, ResultsTable, Row, Status};
pub use report::Format;
