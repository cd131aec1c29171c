//! Synthetic studies for `gpsmc`: data generators, scaling, the regression,
//! classification and optimization experiments, and result emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classification;
pub mod config;
pub mod data;
mod error;
pub mod fit;
pub mod io;
pub mod optimization;
pub mod report;
pub mod sinusoid;

pub use config::{Experiment, Format, Preset, RunConfig};
pub use error::{ExperimentError, Result};
pub use report::{Report, Table};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for replication `rep` of a run seeded with `seed`.
pub fn replication_seed(seed: u64, rep: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(rep as u64 + 1)
}
