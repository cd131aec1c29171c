use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::config::EngineConfig;
use super::model::{Dataset, ParticleModel, ParticleRecord};
use super::set::{ParticleSet, StepDiagnostics};

pub const SNAPSHOT_VERSION: u32 = 1;

/// Everything needed to resume a [`ParticleSet`] bit-for-bit. Matrices are
/// not stored; they are rebuilt from the kernel parameters on restore.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar, M: ParticleModel<T>")]
pub struct Snapshot<T: Scalar, M: ParticleModel<T>> {
    pub version: u32,
    pub model: M,
    pub config: EngineConfig<T>,
    pub data: Dataset<T, M::Obs>,
    pub particles: Vec<ParticleRecord<T>>,
    pub streams: Vec<ChaCha8Rng>,
    pub resample_stream: ChaCha8Rng,
    pub history: Vec<StepDiagnostics>,
}

impl<T: Scalar, M: ParticleModel<T>> ParticleSet<T, M> {
    pub fn snapshot(&self) -> Snapshot<T, M> {
        Snapshot {
            version: SNAPSHOT_VERSION,
            model: self.model.clone(),
            config: self.config.clone(),
            data: self.data.clone(),
            particles: self.records(),
            streams: self.streams.clone(),
            resample_stream: self.resample_stream.clone(),
            history: self.history.clone(),
        }
    }

    pub fn restore(snapshot: Snapshot<T, M>) -> Result<Self> {
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {}",
                snapshot.version
            )));
        }
        if snapshot.particles.len() != snapshot.streams.len() {
            return Err(Error::Snapshot("particle and stream counts differ".into()));
        }
        let particles = snapshot
            .particles
            .iter()
            .map(|r| snapshot.model.rebuild(&snapshot.config, &snapshot.data, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: snapshot.model,
            config: snapshot.config,
            data: snapshot.data,
            particles,
            streams: snapshot.streams,
            resample_stream: snapshot.resample_stream,
            history: snapshot.history,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&self.snapshot()).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let snapshot: Snapshot<T, M> =
            serde_json::from_str(json).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::restore(snapshot)
    }
}
