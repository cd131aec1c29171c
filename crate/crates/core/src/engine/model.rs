//! The per-particle pieces of particle learning, for regression and
//! classification.

use std::fmt::Debug;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classify::{
    class_predictive, gibbs_propagate, sample_new_latents, ClassSuffInfo, DEFAULT_FOLD_SIZE,
    DEFAULT_LATENT_DRAWS,
};
use crate::error::{Error, Result};
use crate::gp::{compute_suffstats, predict, predict_log_density, MeanFn, RegressionSuffInfo};
use crate::kernel::KernelParams;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::config::{EngineConfig, Window};
use super::mh::{independence_step, mh_step, suffinfo_for};

/// Inputs and observations seen so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T, O> {
    x: Matrix<T>,
    obs: Vec<O>,
}

impl<T: Scalar, O: Copy> Dataset<T, O> {
    pub fn new(dim: usize) -> Self {
        Self {
            x: Matrix::with_cols(dim),
            obs: Vec::new(),
        }
    }

    pub fn from_parts(x: Matrix<T>, obs: Vec<O>) -> Result<Self> {
        if x.rows() != obs.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                found: obs.len(),
            });
        }
        Ok(Self { x, obs })
    }

    pub fn push(&mut self, point: &[T], obs: O) -> Result<()> {
        self.x.push_row(point)?;
        self.obs.push(obs);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn obs(&self) -> &[O] {
        &self.obs
    }

    /// The first `n` observations.
    pub fn head(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        Self {
            x: self.x.select_rows(&idx),
            obs: self.obs[..idx.len()].to_vec(),
        }
    }
}

/// Serializable identity of a particle: kernel parameters (one set per
/// latent process) and, for classification, the latents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleRecord<T> {
    pub params: Vec<KernelParams<T>>,
    pub latents: Vec<Vec<T>>,
}

/// What particle learning needs from a GP model.
pub trait ParticleModel<T: Scalar>:
    Clone + Debug + Send + Sync + Serialize + DeserializeOwned
{
    type Obs: Copy + Debug + PartialEq + Send + Sync + Serialize + DeserializeOwned;
    type Particle: Clone + Debug + Send + Sync;

    fn validate(&self, config: &EngineConfig<T>, data: &Dataset<T, Self::Obs>) -> Result<()>;

    /// Draws `config.n_particles` particles from the posterior given `data`.
    fn init_particles<R: Rng + ?Sized>(
        &self,
        config: &EngineConfig<T>,
        data: &Dataset<T, Self::Obs>,
        rng: &mut R,
    ) -> Result<Vec<Self::Particle>>;

    /// `log p(z_{t+1} | S_t)`.
    fn log_weight<R: Rng + ?Sized>(
        &self,
        particle: &Self::Particle,
        data: &Dataset<T, Self::Obs>,
        point: &[T],
        obs: Self::Obs,
        rng: &mut R,
    ) -> Result<T>;

    /// `S_{t+1} ~ p(S_{t+1} | S_t, z_{t+1})`; `after` ends with the new point.
    fn propagate<R: Rng + ?Sized>(
        &self,
        particle: &Self::Particle,
        before: &Dataset<T, Self::Obs>,
        after: &Dataset<T, Self::Obs>,
        rng: &mut R,
    ) -> Result<Self::Particle>;

    /// One MH move on the kernel parameters given everything else.
    fn rejuvenate<R: Rng + ?Sized>(
        &self,
        particle: Self::Particle,
        data: &Dataset<T, Self::Obs>,
        window: Window<T>,
        rng: &mut R,
    ) -> Result<Self::Particle>;

    fn log_posterior(&self, particle: &Self::Particle) -> T;

    fn record(&self, particle: &Self::Particle) -> ParticleRecord<T>;

    /// Rebuilds a particle's matrices and statistics from its record.
    fn rebuild(
        &self,
        config: &EngineConfig<T>,
        data: &Dataset<T, Self::Obs>,
        record: &ParticleRecord<T>,
    ) -> Result<Self::Particle>;
}

/// Chain length and thinning so that exactly `n` states are kept.
fn chain_schedule<T: Scalar>(config: &EngineConfig<T>) -> (usize, usize) {
    let keep = config.n_particles * config.init_thin;
    (config.init_mh_rounds.max(keep), config.init_thin)
}

fn collect_thinned<S: Clone>(
    total: usize,
    thin: usize,
    n: usize,
    mut state: S,
    mut step: impl FnMut(S) -> Result<S>,
) -> Result<Vec<S>> {
    let burn = total - n * thin;
    let mut out = Vec::with_capacity(n);
    for round in 1..=total {
        state = step(state)?;
        if round > burn && (round - burn).is_multiple_of(thin) {
            out.push(state.clone());
        }
    }
    Ok(out)
}

/// GP regression with a linear (or zero) mean and marginalized `β`, `σ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct RegressionModel {
    pub mean: MeanFn,
}

impl<T: Scalar> ParticleModel<T> for RegressionModel {
    type Obs = T;
    type Particle = RegressionSuffInfo<T>;

    fn validate(&self, config: &EngineConfig<T>, data: &Dataset<T, T>) -> Result<()> {
        config.validate()?;
        let q = self.mean.basis_len(data.dim());
        if !config.prior.is_proper() && config.t0 <= q {
            return Err(Error::Improper {
                count: config.t0,
                required: q,
            });
        }
        if q > 0 && config.t0 < q {
            return Err(Error::Improper {
                count: config.t0,
                required: q,
            });
        }
        Ok(())
    }

    fn init_particles<R: Rng + ?Sized>(
        &self,
        config: &EngineConfig<T>,
        data: &Dataset<T, T>,
        rng: &mut R,
    ) -> Result<Vec<Self::Particle>> {
        let prior = config.prior;
        if data.is_empty() {
            return (0..config.n_particles)
                .map(|_| {
                    suffinfo_for(
                        &prior.sample_kernel(rng),
                        data.x(),
                        data.obs(),
                        prior,
                        self.mean,
                    )
                })
                .collect();
        }
        let start = loop {
            if let Ok(s) = suffinfo_for(
                &prior.sample_kernel(rng),
                data.x(),
                data.obs(),
                prior,
                self.mean,
            ) {
                break s;
            }
        };
        let (total, thin) = chain_schedule(config);
        collect_thinned(total, thin, config.n_particles, start, |s| {
            Ok(independence_step(&s, data.x(), data.obs(), rng).0)
        })
    }

    fn log_weight<R: Rng + ?Sized>(
        &self,
        particle: &Self::Particle,
        data: &Dataset<T, T>,
        point: &[T],
        obs: T,
        _rng: &mut R,
    ) -> Result<T> {
        let pt = predict(particle, data.x(), point)?;
        Ok(predict_log_density(&pt, obs))
    }

    fn propagate<R: Rng + ?Sized>(
        &self,
        particle: &Self::Particle,
        before: &Dataset<T, T>,
        after: &Dataset<T, T>,
        _rng: &mut R,
    ) -> Result<Self::Particle> {
        let point = after.x().row(after.len() - 1);
        let k = particle.corr().extend_with_point(before.x(), point)?;
        compute_suffstats(
            k,
            after.x(),
            after.obs(),
            *particle.prior(),
            particle.mean_fn(),
        )
    }

    fn rejuvenate<R: Rng + ?Sized>(
        &self,
        particle: Self::Particle,
        data: &Dataset<T, T>,
        window: Window<T>,
        rng: &mut R,
    ) -> Result<Self::Particle> {
        Ok(mh_step(&particle, data.x(), data.obs(), window, rng)?.0)
    }

    fn log_posterior(&self, particle: &Self::Particle) -> T {
        particle.log_posterior()
    }

    fn record(&self, particle: &Self::Particle) -> ParticleRecord<T> {
        ParticleRecord {
            params: vec![*particle.params()],
            latents: Vec::new(),
        }
    }

    fn rebuild(
        &self,
        config: &EngineConfig<T>,
        data: &Dataset<T, T>,
        record: &ParticleRecord<T>,
    ) -> Result<Self::Particle> {
        let [p] = record.params.as_slice() else {
            return Err(Error::Snapshot(
                "regression particle needs one kernel".into(),
            ));
        };
        let params = KernelParams::new(p.d(), p.g())?;
        suffinfo_for(&params, data.x(), data.obs(), config.prior, self.mean)
    }
}

/// Multi-class GP classification; observations are 0-based class indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationModel {
    pub n_classes: usize,
    /// Maximum block size of the randomly blocked latent sampler.
    pub fold_size: usize,
    /// Latent draws per class-predictive evaluation.
    pub latent_draws: usize,
}

impl ClassificationModel {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            fold_size: DEFAULT_FOLD_SIZE,
            latent_draws: DEFAULT_LATENT_DRAWS,
        }
    }
}

impl<T: Scalar> ParticleModel<T> for ClassificationModel {
    type Obs = usize;
    type Particle = ClassSuffInfo<T>;

    fn validate(&self, config: &EngineConfig<T>, data: &Dataset<T, usize>) -> Result<()> {
        config.validate()?;
        if self.n_classes < 2 || self.fold_size == 0 || self.latent_draws == 0 {
            return Err(Error::InvalidParameter(
                "need >= 2 classes, a positive fold size and latent draw count".into(),
            ));
        }
        if !config.prior.is_proper() {
            return Err(Error::InvalidParameter(
                "classification requires a proper prior (a, b > 0)".into(),
            ));
        }
        if let Some(&c) = data.obs().iter().find(|&&c| c >= self.n_classes) {
            return Err(Error::InvalidParameter(format!("label {c} out of range")));
        }
        Ok(())
    }

    fn init_particles<R: Rng + ?Sized>(
        &self,
        config: &EngineConfig<T>,
        data: &Dataset<T, usize>,
        rng: &mut R,
    ) -> Result<Vec<Self::Particle>> {
        let prior = config.prior;
        let latent_rows = self.n_classes - 1;
        let draw_params = |rng: &mut R| -> Vec<KernelParams<T>> {
            (0..latent_rows).map(|_| prior.sample_kernel(rng)).collect()
        };
        let zeros = vec![vec![T::zero(); data.len()]; latent_rows];
        if data.is_empty() {
            return (0..config.n_particles)
                .map(|_| {
                    ClassSuffInfo::new(
                        self.n_classes,
                        &draw_params(rng),
                        data.x(),
                        zeros.clone(),
                        prior,
                    )
                })
                .collect();
        }
        let start = ClassSuffInfo::new(self.n_classes, &draw_params(rng), data.x(), zeros, prior)?;
        let (total, thin) = chain_schedule(config);
        collect_thinned(total, thin, config.n_particles, start, |mut s| {
            for m in 0..latent_rows {
                let y = &s.latents()[m];
                let (next, accepted) = independence_step(&s.per_class()[m], data.x(), y, rng);
                if accepted {
                    s = s.with_class(m, next);
                }
            }
            gibbs_propagate(&s, data.x(), data.obs(), self.fold_size, rng)
        })
    }

    fn log_weight<R: Rng + ?Sized>(
        &self,
        particle: &Self::Particle,
        data: &Dataset<T, usize>,
        point: &[T],
        obs: usize,
        rng: &mut R,
    ) -> Result<T> {
        let probs = class_predictive(particle, data.x(), point, self.latent_draws, rng)?;
        Ok(probs.probs()[obs].ln())
    }

    fn propagate<R: Rng + ?Sized>(
        &self,
        particle: &Self::Particle,
        before: &Dataset<T, usize>,
        after: &Dataset<T, usize>,
        rng: &mut R,
    ) -> Result<Self::Particle> {
        let point = after.x().row(after.len() - 1);
        let fresh = sample_new_latents(particle, before.x(), point, rng)?;
        let extended = particle.extend(before.x(), point, &fresh)?;
        gibbs_propagate(&extended, after.x(), after.obs(), self.fold_size, rng)
    }

    fn rejuvenate<R: Rng + ?Sized>(
        &self,
        mut particle: Self::Particle,
        data: &Dataset<T, usize>,
        window: Window<T>,
        rng: &mut R,
    ) -> Result<Self::Particle> {
        for m in 0..self.n_classes - 1 {
            let (next, accepted) = mh_step(
                &particle.per_class()[m],
                data.x(),
                &particle.latents()[m],
                window,
                rng,
            )?;
            if accepted {
                particle = particle.with_class(m, next);
            }
        }
        Ok(particle)
    }

    fn log_posterior(&self, particle: &Self::Particle) -> T {
        particle.log_posterior()
    }

    fn record(&self, particle: &Self::Particle) -> ParticleRecord<T> {
        ParticleRecord {
            params: particle.params(),
            latents: particle.latents().to_vec(),
        }
    }

    fn rebuild(
        &self,
        config: &EngineConfig<T>,
        data: &Dataset<T, usize>,
        record: &ParticleRecord<T>,
    ) -> Result<Self::Particle> {
        let params = record
            .params
            .iter()
            .map(|p| KernelParams::new(p.d(), p.g()))
            .collect::<Result<Vec<_>>>()?;
        ClassSuffInfo::new(
            self.n_classes,
            &params,
            data.x(),
            record.latents.clone(),
            config.prior,
        )
    }
}
