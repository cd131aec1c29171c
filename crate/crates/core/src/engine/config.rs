use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::PriorSpec;
use crate::scalar::Scalar;

/// Positive sliding window `Unif(ℓ v / u, u v / ℓ)` for multiplicative
/// random-walk proposals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub u: T,
    pub l: T,
}

impl<T: Scalar> Window<T> {
    pub fn new(u: T, l: T) -> Result<Self> {
        if !(u > l && l > T::zero() && u.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "window needs u > l > 0, got ({u}, {l})"
            )));
        }
        Ok(Self { u, l })
    }

    /// The `(4, 3)` baseline.
    pub fn baseline() -> Self {
        Self {
            u: T::lit(4.0),
            l: T::lit(3.0),
        }
    }

    /// Window at data size `t`: both ends shift up by
    /// `u ((1 + 0.1 (t - t0))^γ - 1)`, which narrows `u/ℓ` toward one for
    /// `γ > 0` and leaves the window unchanged for `γ = 0`.
    pub fn at_time(&self, t: usize, t0: usize, gamma: T) -> Self {
        let steps = T::from_usize_lossy(t.saturating_sub(t0));
        let growth = (T::one() + T::lit(0.1) * steps).powf(gamma) - T::one();
        let shift = self.u * growth;
        Self {
            u: self.u + shift,
            l: self.l + shift,
        }
    }

    pub fn propose<R: Rng + ?Sized>(&self, value: T, rng: &mut R) -> T {
        let lo = self.l * value / self.u;
        let hi = self.u * value / self.l;
        let v: f64 = rng.random();
        lo + (hi - lo) * T::lit(v)
    }

    /// Whether `proposal` lies in the window around `value`.
    pub fn contains(&self, value: T, proposal: T) -> bool {
        proposal >= self.l * value / self.u && proposal <= self.u * value / self.l
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ResampleScheme {
    #[default]
    Multinomial,
    Systematic,
}

impl std::str::FromStr for ResampleScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial" => Ok(Self::Multinomial),
            "systematic" => Ok(Self::Systematic),
            other => Err(Error::InvalidParameter(format!(
                "unknown resample scheme {other}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig<T> {
    pub n_particles: usize,
    pub t0: usize,
    /// Length of the initialization chain (extended to `n_particles * init_thin`
    /// if shorter).
    pub init_mh_rounds: usize,
    pub init_thin: usize,
    pub rejuvenate: bool,
    pub window: Window<T>,
    /// Narrowing exponent for [`Window::at_time`]; zero keeps the window fixed.
    pub window_gamma: T,
    pub prior: PriorSpec<T>,
    pub resample: ResampleScheme,
    pub seed: u64,
    /// Evaluate weights and propagate particles on the rayon pool.
    pub parallel: bool,
}

impl<T: Scalar> EngineConfig<T> {
    /// N = 1000 particles, 10,000 initialization rounds thinned by 10.
    pub fn paper(prior: PriorSpec<T>, t0: usize, seed: u64) -> Self {
        Self {
            n_particles: 1000,
            t0,
            init_mh_rounds: 10_000,
            init_thin: 10,
            rejuvenate: true,
            window: Window::baseline(),
            window_gamma: T::zero(),
            prior,
            resample: ResampleScheme::Multinomial,
            seed,
            parallel: true,
        }
    }

    /// N = 200 particles, 2,000 initialization rounds thinned by 10.
    pub fn desk(prior: PriorSpec<T>, t0: usize, seed: u64) -> Self {
        Self {
            n_particles: 200,
            init_mh_rounds: 2_000,
            ..Self::paper(prior, t0, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidParameter("need at least one particle".into()));
        }
        if self.init_thin == 0 {
            return Err(Error::InvalidParameter("init_thin must be positive".into()));
        }
        Window::new(self.window.u, self.window.l)?;
        if !(self.window_gamma >= T::zero()) {
            return Err(Error::InvalidParameter(
                "window_gamma must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn window_at(&self, t: usize) -> Window<T> {
        self.window.at_time(t, self.t0, self.window_gamma)
    }
}
