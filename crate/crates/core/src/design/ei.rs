use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::argmax;
use crate::engine::{ParticleSet, RegressionModel};
use crate::error::{Error, Result};
use crate::gp::{predict, predict_mean, PredictiveT, RegressionSuffInfo};
use crate::matrix::Matrix;
use crate::scalar::{student_t_cdf, student_t_ln_pdf, Scalar};

use super::{AcquisitionRecord, CandidateSet};

/// `E[max(f_min - Y, 0)]` for `Y` Student-t with the given location, scale
/// and degrees of freedom.
pub fn expected_improvement<T: Scalar>(pt: &PredictiveT<T>, f_min: T) -> Result<T> {
    let nu = pt.dof;
    if !(nu > T::one()) {
        return Err(Error::EiDegreesOfFreedom(nu.as_f64()));
    }
    let delta = f_min - pt.mean;
    let sigma = pt.sd();
    if !(sigma > T::zero()) {
        return Ok(delta.max(T::zero()));
    }
    let z = delta / sigma;
    let cdf = student_t_cdf(z, nu);
    let pdf = student_t_ln_pdf(z, nu).exp();
    let ei = delta * cdf + (nu * sigma + delta * delta / sigma) * pdf / (nu - T::one());
    Ok(ei.max(T::zero()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FMinMode {
    /// Smallest observed response.
    Observed,
    /// Smallest particle-averaged predictive mean over a probe set.
    #[default]
    MeanSurface,
}

/// Particle-averaged predictive mean at `point`.
pub fn posterior_mean<T: Scalar>(ps: &ParticleSet<T, RegressionModel>, point: &[T]) -> T {
    let design = ps.data().x();
    let total: T = ps
        .particles()
        .iter()
        .map(|p| predict_mean(p, design, point))
        .sum();
    total / T::from_usize_lossy(ps.len())
}

pub fn f_min<T: Scalar>(
    ps: &ParticleSet<T, RegressionModel>,
    mode: FMinMode,
    probe: &Matrix<T>,
) -> Result<T> {
    if ps.data().is_empty() {
        return Err(Error::EmptyData);
    }
    match mode {
        FMinMode::Observed => Ok(ps.data().obs().iter().copied().fold(T::infinity(), T::min)),
        FMinMode::MeanSurface => {
            if probe.rows() == 0 {
                return Err(Error::EmptyCandidates);
            }
            Ok((0..probe.rows())
                .into_par_iter()
                .map(|i| posterior_mean(ps, probe.row(i)))
                .collect::<Vec<_>>()
                .into_iter()
                .fold(T::infinity(), T::min))
        }
    }
}

struct MeanSurface<'a, T> {
    particle: &'a RegressionSuffInfo<T>,
    design: &'a Matrix<T>,
}

impl<T: Scalar> CostFunction for MeanSurface<'_, T> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let clamped: Vec<T> = p.iter().map(|&v| T::lit(v.clamp(0.0, 1.0))).collect();
        let outside: f64 = p.iter().map(|&v| (v - v.clamp(0.0, 1.0)).powi(2)).sum();
        Ok(predict_mean(self.particle, self.design, &clamped).as_f64() + 1e6 * outside)
    }
}

/// Minimizer of the MAP particle's predictive mean, found by Nelder-Mead
/// from the best seed and kept inside the unit cube. Falls back to the best
/// seed if the search fails or does not improve on it.
pub fn map_candidate<T: Scalar>(
    ps: &ParticleSet<T, RegressionModel>,
    seeds: &CandidateSet<T>,
) -> Result<Vec<T>> {
    if seeds.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if ps.is_empty() {
        return Err(Error::InvalidParameter("empty particle set".into()));
    }
    let particle = ps.map_particle();
    let design = ps.data().x();
    let neg_means: Vec<T> = (0..seeds.len())
        .map(|i| -predict_mean(particle, design, seeds.point(i)))
        .collect();
    let best = argmax(&neg_means);
    let seed = seeds.point(best).to_vec();
    let seed_cost = -neg_means[best].as_f64();

    let start: Vec<f64> = seed.iter().map(|v| v.as_f64()).collect();
    let mut simplex = vec![start.clone()];
    for j in 0..start.len() {
        let mut v = start.clone();
        v[j] += if v[j] > 0.5 { -0.05 } else { 0.05 };
        simplex.push(v);
    }
    let problem = MeanSurface { particle, design };
    let found = NelderMead::new(simplex)
        .with_sd_tolerance(1e-10)
        .ok()
        .and_then(|solver| {
            Executor::new(problem, solver)
                .configure(|s| s.max_iters(500))
                .run()
                .ok()
        })
        .and_then(|res| Some((res.state.best_param?, res.state.best_cost)));
    Ok(match found {
        Some((x, cost)) if cost.is_finite() && cost <= seed_cost => {
            x.iter().map(|&v| T::lit(v.clamp(0.0, 1.0))).collect()
        }
        _ => seed,
    })
}

/// Particle-averaged EI over `cands` augmented with [`map_candidate`]; the
/// augmented point is scored last.
pub fn choose_next_ei<T: Scalar>(
    ps: &ParticleSet<T, RegressionModel>,
    cands: &CandidateSet<T>,
    mode: FMinMode,
) -> Result<AcquisitionRecord<T>> {
    if cands.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let x_star = map_candidate(ps, cands)?;
    let scored = cands.augmented(&x_star)?;
    let best = match mode {
        FMinMode::Observed => f_min(ps, mode, scored.points())?,
        FMinMode::MeanSurface => {
            let mut probe = scored.points().clone();
            for i in 0..ps.data().len() {
                probe.push_row(ps.data().x().row(i))?;
            }
            f_min(ps, mode, &probe)?
        }
    };
    let design = ps.data().x();
    let n = T::from_usize_lossy(ps.len());
    let scores = (0..scored.len())
        .into_par_iter()
        .map(|j| {
            let point = scored.point(j);
            let mut total = T::zero();
            let mut skipped = 0usize;
            for p in ps.particles() {
                let pt = predict(p, design, point)?;
                match expected_improvement(&pt, best) {
                    Ok(ei) => total += ei,
                    Err(Error::EiDegreesOfFreedom(_)) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok((total / n, skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped: usize = scores.iter().map(|s| s.1).sum();
    if skipped > 0 {
        warn!("{skipped} particle predictives had dof <= 1 and contributed zero EI");
    }
    let per_candidate: Vec<T> = scores.into_iter().map(|s| s.0).collect();
    let index = argmax(&per_candidate);
    Ok(AcquisitionRecord {
        chosen: scored.point(index).to_vec(),
        index,
        score: per_candidate[index],
        x_star: Some(x_star),
        per_candidate,
    })
}
