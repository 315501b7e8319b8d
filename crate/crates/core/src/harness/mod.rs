//! Experiment harness: configuration, data ingestion, the seeded pipeline
//! runner and result persistence. This is the reproducibility shell around
//! the solvers; the CLI binary is a thin wrapper over these functions.

mod config;
mod front_io;
mod ingest;
mod report;
mod runner;

pub use config::{
    ExperimentConfig, GaOverrides, IngestConfig, Phase1, PipelineId, ReferenceConfig,
    ReportConfig,
};
pub use front_io::{read_front_csv, write_front_csv, FrontRow};
pub use ingest::ingest;
pub use report::{build_reference_from_csvs, report, write_reference_csv};
pub use runner::{run_pipeline, RunRecord};
