use std::collections::HashSet;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

use super::config::{EngineConfig, ResampleScheme};
use super::model::{Dataset, ParticleModel, ParticleRecord};

/// Per-update summary of the particle approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Number of observations after the update.
    pub t: usize,
    /// Effective sample size of the resampling weights.
    pub ess: f64,
    /// Distinct kernel-parameter values after propagation.
    pub unique_params: usize,
}

/// `1 / Σ w²` for normalized weights given on the log scale.
pub fn effective_sample_size(log_w: &[f64]) -> f64 {
    let lse = log_sum_exp(log_w);
    let sum_sq: f64 = log_w.iter().map(|&l| (2.0 * (l - lse)).exp()).sum();
    1.0 / sum_sq
}

/// Draws `log_w.len()` ancestor indices with probabilities proportional to
/// `exp(log_w)`.
pub fn resample_indices<R: Rng + ?Sized>(
    log_w: &[f64],
    scheme: ResampleScheme,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = log_w.len();
    let offending: Vec<usize> = (0..n).filter(|&i| log_w[i].is_nan()).collect();
    let lse = log_sum_exp(log_w);
    if n == 0 || !lse.is_finite() {
        return Err(Error::DegenerateWeights {
            offending: if offending.is_empty() {
                (0..n).collect()
            } else {
                offending
            },
        });
    }
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &l in log_w {
        acc += (l - lse).exp();
        cdf.push(acc);
    }
    let total = acc;
    let pick = |u: f64| cdf.partition_point(|&c| c <= u * total).min(n - 1);
    Ok(match scheme {
        ResampleScheme::Multinomial => (0..n).map(|_| pick(rng.random::<f64>())).collect(),
        ResampleScheme::Systematic => {
            let u0: f64 = rng.random();
            (0..n).map(|i| pick((i as f64 + u0) / n as f64)).collect()
        }
    })
}

/// `N` particles approximating the posterior over sufficient information,
/// updated one observation at a time.
///
/// Each particle slot owns a ChaCha8 stream derived from the seed, so results
/// do not depend on whether slots run serially or on the rayon pool.
#[derive(Clone, Debug)]
pub struct ParticleSet<T: Scalar, M: ParticleModel<T>> {
    pub(super) model: M,
    pub(super) config: EngineConfig<T>,
    pub(super) data: Dataset<T, M::Obs>,
    pub(super) particles: Vec<M::Particle>,
    pub(super) streams: Vec<ChaCha8Rng>,
    pub(super) resample_stream: ChaCha8Rng,
    pub(super) history: Vec<StepDiagnostics>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn map_slots<A, F>(parallel: bool, streams: &mut [ChaCha8Rng], f: F) -> Vec<A>
where
    A: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> A + Send + Sync,
{
    if parallel {
        streams
            .par_iter_mut()
            .enumerate()
            .map(|(i, r)| f(i, r))
            .collect()
    } else {
        streams
            .iter_mut()
            .enumerate()
            .map(|(i, r)| f(i, r))
            .collect()
    }
}

impl<T: Scalar, M: ParticleModel<T>> ParticleSet<T, M> {
    /// Initializes on the first `config.t0` observations of `data`, then
    /// assimilates the rest one at a time.
    pub fn initialize(model: M, config: EngineConfig<T>, data: Dataset<T, M::Obs>) -> Result<Self> {
        if data.len() < config.t0 {
            return Err(Error::DimensionMismatch {
                expected: config.t0,
                found: data.len(),
            });
        }
        model.validate(&config, &data)?;
        let head = data.head(config.t0);
        let mut resample_stream = stream(config.seed, 0);
        let particles = model.init_particles(&config, &head, &mut resample_stream)?;
        let streams = (0..config.n_particles)
            .map(|i| stream(config.seed, i as u64 + 1))
            .collect();
        let mut set = Self {
            model,
            config,
            data: head,
            particles,
            streams,
            resample_stream,
            history: Vec::new(),
        };
        for i in set.config.t0..data.len() {
            set.update(data.x().row(i), data.obs()[i])?;
        }
        Ok(set)
    }

    /// `log p(z | S_t^(i))` for every particle.
    pub fn log_weights(&mut self, point: &[T], obs: M::Obs) -> Result<Vec<f64>> {
        let (model, data, particles) = (&self.model, &self.data, &self.particles);
        map_slots(self.config.parallel, &mut self.streams, |i, rng| {
            model
                .log_weight(&particles[i], data, point, obs, rng)
                .map(Scalar::as_f64)
        })
        .into_iter()
        .collect()
    }

    /// One particle-learning step: reweight by the predictive of `(point, obs)`,
    /// resample, propagate, and optionally rejuvenate the kernel parameters.
    pub fn update(&mut self, point: &[T], obs: M::Obs) -> Result<StepDiagnostics> {
        if point.len() != self.data.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data.dim(),
                found: point.len(),
            });
        }
        let mut log_w = self.log_weights(point, obs)?;
        let nan: Vec<usize> = (0..log_w.len()).filter(|&i| log_w[i].is_nan()).collect();
        if !nan.is_empty() {
            if nan.len() == log_w.len() {
                return Err(Error::DegenerateWeights { offending: nan });
            }
            warn!(
                "{} particle weights were NaN and are treated as zero",
                nan.len()
            );
            for &i in &nan {
                log_w[i] = f64::NEG_INFINITY;
            }
        }
        let ess = effective_sample_size(&log_w);
        let ancestors = resample_indices(&log_w, self.config.resample, &mut self.resample_stream)?;

        let before = &self.data;
        let mut after = before.clone();
        after.push(point, obs)?;
        let window = self.config.window_at(after.len());
        let (model, particles, rejuvenate) = (&self.model, &self.particles, self.config.rejuvenate);
        let next = map_slots(self.config.parallel, &mut self.streams, |i, rng| {
            let p = model.propagate(&particles[ancestors[i]], before, &after, rng)?;
            if rejuvenate {
                model.rejuvenate(p, &after, window, rng)
            } else {
                Ok(p)
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        self.particles = next;
        self.data = after;
        let diag = StepDiagnostics {
            t: self.data.len(),
            ess,
            unique_params: self.unique_param_count(),
        };
        self.history.push(diag);
        Ok(diag)
    }

    /// Number of distinct kernel-parameter tuples among the particles.
    pub fn unique_param_count(&self) -> usize {
        self.particles
            .iter()
            .map(|p| {
                self.model
                    .record(p)
                    .params
                    .iter()
                    .flat_map(|k| [k.d().as_f64().to_bits(), k.g().as_f64().to_bits()])
                    .collect::<Vec<_>>()
            })
            .collect::<HashSet<_>>()
            .len()
    }

    /// Index of the particle with the highest unnormalized log posterior
    /// (lowest index on ties).
    pub fn map_index(&self) -> usize {
        let lp: Vec<T> = self
            .particles
            .iter()
            .map(|p| self.model.log_posterior(p))
            .collect();
        crate::classify::argmax(&lp)
    }

    pub fn map_particle(&self) -> &M::Particle {
        &self.particles[self.map_index()]
    }

    pub fn records(&self) -> Vec<ParticleRecord<T>> {
        self.particles
            .iter()
            .map(|p| self.model.record(p))
            .collect()
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn config(&self) -> &EngineConfig<T> {
        &self.config
    }

    pub fn data(&self) -> &Dataset<T, M::Obs> {
        &self.data
    }

    pub fn particles(&self) -> &[M::Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Number of observations assimilated.
    pub fn t(&self) -> usize {
        self.data.len()
    }

    pub fn history(&self) -> &[StepDiagnostics] {
        &self.history
    }
}
