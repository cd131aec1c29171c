use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{argmax, class_predictive, ClassProbs};
use crate::engine::{ClassificationModel, ParticleSet};
use crate::error::{Error, Result};
use crate::kernel::sq_dist;
use crate::scalar::Scalar;

use super::{AcquisitionRecord, CandidateSet, Provenance};

fn xlogx<T: Scalar>(p: T) -> T {
    if p > T::zero() {
        p * p.ln()
    } else {
        T::zero()
    }
}

/// Shannon entropy `-Σ p ln p`.
pub fn entropy<T: Scalar>(probs: &ClassProbs<T>) -> T {
    -probs.probs().iter().map(|&p| xlogx(p)).sum::<T>()
}

/// Binary entropy of the two largest probabilities after renormalizing them.
pub fn bvsb_entropy<T: Scalar>(probs: &ClassProbs<T>) -> T {
    let (mut first, mut second) = (T::zero(), T::zero());
    for &p in probs.probs() {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    let total = first + second;
    if !(total > T::zero()) {
        return T::zero();
    }
    -(xlogx(first / total) + xlogx(second / total))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Smoothing<T> {
    #[default]
    Off,
    /// Gaussian kernel smoothing with range `d_s`; `None` uses the mean range
    /// of the MAP particle's latent processes.
    Kernel(Option<T>),
}

/// Particle-averaged class probabilities at `point`.
pub fn posterior_class_probs<T: Scalar, R: Rng + ?Sized>(
    ps: &ParticleSet<T, ClassificationModel>,
    point: &[T],
    rng: &mut R,
) -> Result<ClassProbs<T>> {
    let draws = ps.model().latent_draws;
    let per_particle = ps
        .particles()
        .iter()
        .map(|p| class_predictive(p, ps.data().x(), point, draws, rng))
        .collect::<Result<Vec<_>>>()?;
    ClassProbs::mean_of(&per_particle)
}

/// Kernel-weighted averages of `scores` with weights `exp(-‖x - x'‖² / d_s)`.
pub fn smooth_scores<T: Scalar>(cands: &CandidateSet<T>, scores: &[T], d_s: T) -> Vec<T> {
    (0..cands.len())
        .map(|j| {
            let (mut num, mut den) = (T::zero(), T::zero());
            for (k, &s) in scores.iter().enumerate() {
                let w = (-sq_dist(cands.point(j), cands.point(k)) / d_s).exp();
                num += w * s;
                den += w;
            }
            num / den
        })
        .collect()
}

/// Picks the candidate with the largest particle-mean BVSB entropy, optionally
/// smoothed. The chosen point is removed from a fixed pool.
pub fn choose_next_entropy<T: Scalar, R: Rng + ?Sized>(
    ps: &ParticleSet<T, ClassificationModel>,
    cands: &mut CandidateSet<T>,
    smoothing: Smoothing<T>,
    rng: &mut R,
) -> Result<AcquisitionRecord<T>> {
    if cands.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let seed: u64 = rng.random();
    let draws = ps.model().latent_draws;
    let design = ps.data().x();
    let n = T::from_usize_lossy(ps.len());
    let scores = (0..cands.len())
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let mut total = T::zero();
            for p in ps.particles() {
                total += bvsb_entropy(&class_predictive(
                    p,
                    design,
                    cands.point(j),
                    draws,
                    &mut rng,
                )?);
            }
            Ok(total / n)
        })
        .collect::<Result<Vec<T>>>()?;
    let per_candidate = match smoothing {
        Smoothing::Off => scores,
        Smoothing::Kernel(d_s) => {
            let d_s = d_s.unwrap_or_else(|| {
                let params = ps.map_particle().params();
                params.iter().map(|k| k.d()).sum::<T>() / T::from_usize_lossy(params.len())
            });
            if !(d_s > T::zero()) {
                return Err(Error::InvalidParameter(
                    "smoothing range must be positive".into(),
                ));
            }
            smooth_scores(cands, &scores, d_s)
        }
    };
    let index = argmax(&per_candidate);
    let chosen = if cands.provenance() == Provenance::FixedPool {
        cands.remove(index)
    } else {
        cands.point(index).to_vec()
    };
    Ok(AcquisitionRecord {
        chosen,
        index,
        score: per_candidate[index],
        x_star: None,
        per_candidate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn probs(v: &[f64]) -> ClassProbs<f64> {
        ClassProbs::new(v.to_vec()).unwrap()
    }

    #[test]
    fn uniform_three_class() {
        let p = probs(&[1.0 / 3.0; 3]);
        assert!((entropy(&p) - 3f64.ln()).abs() < 1e-12);
        assert!((bvsb_entropy(&p) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn certain_class_has_zero_entropy() {
        let p = probs(&[1.0, 0.0, 0.0]);
        assert_eq!(entropy(&p), 0.0);
        assert_eq!(bvsb_entropy(&p), 0.0);
    }

    #[test]
    fn bvsb_ignores_irrelevant_class() {
        let p = probs(&[0.49, 0.49, 0.02]);
        assert!((bvsb_entropy(&p) - 2f64.ln()).abs() < 1e-12);
        assert!(entropy(&p) < 3f64.ln());
    }

    #[test]
    fn bvsb_equals_entropy_for_two_classes() {
        let p = probs(&[0.3, 0.7]);
        assert!((bvsb_entropy(&p) - entropy(&p)).abs() < 1e-15);
    }

    fn two_points() -> CandidateSet<f64> {
        CandidateSet::new(
            Matrix::from_rows(&[vec![0.1], vec![0.9]]),
            Provenance::FixedPool,
        )
        .unwrap()
    }

    #[test]
    fn tiny_range_smoothing_is_identity() {
        let s = smooth_scores(&two_points(), &[0.1, 0.6], 1e-12);
        assert_eq!(s, vec![0.1, 0.6]);
    }

    #[test]
    fn huge_range_smoothing_flattens() {
        let s = smooth_scores(&two_points(), &[0.1, 0.6], 1e300);
        assert_eq!(s[0], s[1]);
        assert_eq!(argmax(&s), 0);
    }
}
