//! Sequential Monte Carlo inference for Gaussian process models.
//!
//! The crate implements particle learning for GP regression (isotropic
//! Gaussian correlation with a nugget, linear mean, marginalized `beta` and
//! `sigma^2`) and for multi-class GP classification through softmax-linked
//! latent processes. Each particle carries the sufficient information needed
//! for closed-form Student-t prediction, so an update from `t` to `t + 1` data
//! points costs `O(t^2)` per particle rather than a full MCMC restart.
//!
//! On top of the particle approximation sit the sequential design tools:
//! expected improvement for noisy minimization, best-versus-second-best
//! entropy for exploring classification boundaries, and Latin hypercube /
//! maximum entropy design generators.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the scalar to `f64`.
//!
//! ```
//! use gpsmc::{build_corr, KernelParams, Matrix};
//!
//! let x = Matrix::from_rows(&[vec![0.0], vec![0.5], vec![1.0]]);
//! let params = KernelParams::new(0.5, 0.01).unwrap();
//! let k = build_corr(&x, &params).unwrap();
//! assert!((k.values()[(0, 0)] - 1.01_f64).abs() < 1e-15);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classify;
pub mod design;
pub mod engine;
mod error;
pub mod gp;
pub mod kernel;
pub mod matrix;
pub mod scalar;

pub use classify::{
    class_predictive, gibbs_propagate, sample_new_latents, softmax, softmax_prob, ClassProbs,
    ClassSuffInfo,
};
pub use design::{
    bvsb_entropy, choose_next_ei, choose_next_entropy, entropy, expected_improvement, f_min, lhd,
    map_candidate, med, AcquisitionRecord, CandidateSet, FMinMode, Provenance, Smoothing,
};
pub use engine::{
    mh_step, run_mcmc, ClassificationModel, Dataset, EngineConfig, ParticleModel, ParticleSet,
    RegressionModel, ResampleScheme, Window,
};
pub use error::{Error, Result};
pub use gp::{
    block_predict, compute_suffstats, log_marginal, predict, predict_density, predict_log_density,
    predict_mean, BlockPredictive, MeanFn, PredictiveT, PriorSpec, RegressionSuffInfo,
};
pub use kernel::{block_solve, build_corr, corr, extend_inverse, CorrMatrix, KernelParams};
pub use matrix::{Cholesky, Matrix};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type KernelParams64 = KernelParams<f64>;
pub type CorrMatrix64 = CorrMatrix<f64>;
pub type PriorSpec64 = PriorSpec<f64>;
pub type PredictiveT64 = PredictiveT<f64>;
pub type RegressionSuffInfo64 = RegressionSuffInfo<f64>;
pub type ClassSuffInfo64 = ClassSuffInfo<f64>;
pub type ClassProbs64 = ClassProbs<f64>;
pub type EngineConfig64 = EngineConfig<f64>;
pub type CandidateSet64 = CandidateSet<f64>;
pub type RegressionParticles64 = ParticleSet<f64, RegressionModel>;
pub type ClassParticles64 = ParticleSet<f64, ClassificationModel>;
