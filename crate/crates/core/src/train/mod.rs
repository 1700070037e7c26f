//! Training loop, evaluation, diagnostics, sweeps and ablations.

mod config;
mod experiments;
mod metrics;
mod optim;
pub mod output;
mod report;
mod runner;

pub use config::{AblationConfig, DataConfig, OptimConfig, SweepConfig, TrainConfig, Variant};
pub use experiments::{ablate, depth_sweep, run_all, train_all, Prepared};
pub use metrics::{
    accuracy, decline_percent, dirichlet_energy, mean_pairwise_cosine, mean_std, propagation_smoothing,
    smoothing_metrics, SmoothingRow, COSINE_SAMPLE,
};
pub use optim::{adam_step, AdamHyper, AdamW, Moments};
pub use report::{
    AblationReport, AblationRow, Provenance, RunReport, Summary, SweepReport, SweepRow, REPORT_SCHEMA_VERSION,
};
pub use runner::{train_one, EpochRecord, GateStat, RunResult, RunSpec, TrainedRun};
