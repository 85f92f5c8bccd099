//! The eight benchmark applications assembled from the kernels.

pub mod config;
pub mod features;
pub mod memory;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod synth;

mod id;

pub use config::{AppConfig, Arithmetic, KernelParams};
pub use id::AppId;
pub use memory::MemoryLedger;
pub use metrics::{
    characterize, characterize_default, dominant_kernel_share, reference_profile, AppMetrics, CycleSource, DutyCycleMetric, MainOperations,
};
pub use models::AppModel;
pub use pipeline::{build_app, majority_vote, stage_names, Classification, Pipeline, StageRecord, WindowRun};
pub use synth::{synthetic_input, WindowInput};
