//! Particle learning for GP models: configuration, MH moves, the per-model
//! hooks and the particle set that ties them together.

mod config;
mod mh;
mod model;
mod set;
mod snapshot;

pub use config::{EngineConfig, ResampleScheme, Window};
pub use mh::{independence_step, mh_step, run_mcmc, suffinfo_for, window_log_ratio};
pub use model::{ClassificationModel, Dataset, ParticleModel, ParticleRecord, RegressionModel};
pub use set::{effective_sample_size, resample_indices, ParticleSet, StepDiagnostics};
pub use snapshot::{Snapshot, SNAPSHOT_VERSION};
