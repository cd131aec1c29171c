//! Multi-class GP classification through softmax-linked latent processes.
//!
//! `M` classes use `M - 1` independent zero-mean GPs; the latent for the last
//! class is pinned at zero. Class probabilities are
//! `p(c | y) = exp(-y_c) / Σ_m exp(-y_m)`, so a large latent makes its class
//! unlikely.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{block_predict, compute_suffstats, predict, MeanFn, PriorSpec, RegressionSuffInfo};
use crate::kernel::{build_corr, CorrMatrix, KernelParams};
use crate::matrix::Matrix;
use crate::scalar::{log_sum_exp, Scalar};

/// Default block size for the randomly blocked latent sampler.
pub const DEFAULT_FOLD_SIZE: usize = 10;

/// Default number of latent draws in the Monte Carlo class predictive.
pub const DEFAULT_LATENT_DRAWS: usize = 100;

/// A probability vector over classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProbs<T>(Vec<T>);

impl<T: Scalar> ClassProbs<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let sum: T = probs.iter().copied().sum();
        if probs.is_empty()
            || probs.iter().any(|&p| !(p >= T::zero()))
            || (sum - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0))
        {
            return Err(Error::InvalidParameter(format!(
                "not a probability vector (sum {sum})"
            )));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[T] {
        &self.0
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    /// Most probable class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Average of several probability vectors of equal length.
    pub fn mean_of(items: &[ClassProbs<T>]) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyData)?;
        let m = first.n_classes();
        let mut acc = vec![T::zero(); m];
        for p in items {
            for (a, &v) in acc.iter_mut().zip(&p.0) {
                *a += v;
            }
        }
        let n = T::from_usize_lossy(items.len());
        Self::new(acc.into_iter().map(|v| v / n).collect())
    }
}

pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Softmax over the full `M`-vector of latents.
pub fn softmax<T: Scalar>(latents: &[T]) -> Vec<T> {
    let neg: Vec<T> = latents.iter().map(|&y| -y).collect();
    let lse = log_sum_exp(&neg);
    neg.into_iter().map(|v| (v - lse).exp()).collect()
}

/// `p(c | y)` for a full `M`-vector of latents.
pub fn softmax_prob<T: Scalar>(latents: &[T], class: usize) -> T {
    log_softmax_prob(latents, class).exp()
}

pub fn log_softmax_prob<T: Scalar>(latents: &[T], class: usize) -> T {
    let neg: Vec<T> = latents.iter().map(|&y| -y).collect();
    neg[class] - log_sum_exp(&neg)
}

/// Sufficient information for one classification particle.
#[derive(Clone, Debug)]
pub struct ClassSuffInfo<T> {
    n_classes: usize,
    per_class: Vec<RegressionSuffInfo<T>>,
    latents: Vec<Vec<T>>,
}

impl<T: Scalar> ClassSuffInfo<T> {
    /// Builds correlation matrices and statistics from kernel parameters and
    /// latents (`M - 1` rows of length `t`).
    pub fn new(
        n_classes: usize,
        params: &[KernelParams<T>],
        design: &Matrix<T>,
        latents: Vec<Vec<T>>,
        prior: PriorSpec<T>,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::InvalidParameter("need at least two classes".into()));
        }
        if params.len() != n_classes - 1 || latents.len() != n_classes - 1 {
            return Err(Error::DimensionMismatch {
                expected: n_classes - 1,
                found: params.len().min(latents.len()),
            });
        }
        if !prior.is_proper() {
            return Err(Error::InvalidParameter(
                "classification requires a proper prior (a, b > 0)".into(),
            ));
        }
        let per_class = params
            .iter()
            .zip(&latents)
            .map(|(p, y)| {
                let k = if design.rows() == 0 {
                    CorrMatrix::empty(*p)
                } else {
                    build_corr(design, p)?
                };
                compute_suffstats(k, design, y, prior, MeanFn::Zero)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(n_classes, per_class, latents)
    }

    pub fn from_parts(
        n_classes: usize,
        per_class: Vec<RegressionSuffInfo<T>>,
        latents: Vec<Vec<T>>,
    ) -> Result<Self> {
        let t = latents.first().map_or(0, Vec::len);
        let ok = per_class.len() == n_classes - 1
            && latents.len() == n_classes - 1
            && per_class.iter().all(|s| s.t() == t)
            && latents
                .iter()
                .all(|row| row.len() == t && row.iter().all(|v| v.is_finite()));
        if !ok {
            return Err(Error::InvalidParameter(
                "inconsistent class sufficient information".into(),
            ));
        }
        Ok(Self {
            n_classes,
            per_class,
            latents,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn t(&self) -> usize {
        self.latents.first().map_or(0, Vec::len)
    }

    pub fn per_class(&self) -> &[RegressionSuffInfo<T>] {
        &self.per_class
    }

    pub fn latents(&self) -> &[Vec<T>] {
        &self.latents
    }

    pub fn params(&self) -> Vec<KernelParams<T>> {
        self.per_class.iter().map(|s| *s.params()).collect()
    }

    /// Full `M`-vector of latents at data index `i` (last class pinned at 0).
    pub fn latents_at(&self, i: usize) -> Vec<T> {
        full_latents(self.latents.iter().map(|row| row[i]))
    }

    /// Sum over classes of the unnormalized kernel-parameter log posterior.
    pub fn log_posterior(&self) -> T {
        self.per_class
            .iter()
            .map(RegressionSuffInfo::log_posterior)
            .sum()
    }

    /// Replaces one class's statistics, e.g. after an MH move on its kernel.
    pub fn with_class(&self, m: usize, s: RegressionSuffInfo<T>) -> Self {
        let mut out = self.clone();
        out.per_class[m] = s;
        out
    }

    /// Grows every class's `K` by `point` and appends its latents.
    pub fn extend(&self, design: &Matrix<T>, point: &[T], new_latents: &[T]) -> Result<Self> {
        if new_latents.len() != self.n_classes - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes - 1,
                found: new_latents.len(),
            });
        }
        let mut next_design = design.clone();
        next_design.push_row(point)?;
        let mut latents = self.latents.clone();
        for (row, &v) in latents.iter_mut().zip(new_latents) {
            row.push(v);
        }
        let per_class = self
            .per_class
            .iter()
            .zip(&latents)
            .map(|(s, y)| {
                let k = s.corr().extend_with_point(design, point)?;
                compute_suffstats(k, &next_design, y, *s.prior(), MeanFn::Zero)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_classes: self.n_classes,
            per_class,
            latents,
        })
    }

    fn with_latents(&self, design: &Matrix<T>, latents: Vec<Vec<T>>) -> Result<Self> {
        let per_class = self
            .per_class
            .iter()
            .zip(&latents)
            .map(|(s, y)| compute_suffstats(s.corr().clone(), design, y, *s.prior(), MeanFn::Zero))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_classes: self.n_classes,
            per_class,
            latents,
        })
    }
}

fn full_latents<T: Scalar>(partial: impl Iterator<Item = T>) -> Vec<T> {
    partial.chain(std::iter::once(T::zero())).collect()
}

/// Monte Carlo estimate of `p(c(x) | S)` from `draws` joint latent samples.
pub fn class_predictive<T: Scalar, R: Rng + ?Sized>(
    s: &ClassSuffInfo<T>,
    design: &Matrix<T>,
    point: &[T],
    draws: usize,
    rng: &mut R,
) -> Result<ClassProbs<T>> {
    if draws == 0 {
        return Err(Error::InvalidParameter(
            "need at least one latent draw".into(),
        ));
    }
    let preds = s
        .per_class
        .iter()
        .map(|c| predict(c, design, point))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = vec![T::zero(); s.n_classes];
    let mut y = vec![T::zero(); s.n_classes];
    for _ in 0..draws {
        for (yi, pt) in y.iter_mut().zip(&preds) {
            *yi = pt.sample(rng);
        }
        for (a, p) in acc.iter_mut().zip(softmax(&y)) {
            *a += p;
        }
    }
    let n = T::from_usize_lossy(draws);
    let mut probs: Vec<T> = acc.into_iter().map(|a| a / n).collect();
    // Renormalize away accumulated round-off.
    let total: T = probs.iter().copied().sum();
    for p in &mut probs {
        *p /= total;
    }
    ClassProbs::new(probs)
}

/// One independent draw per latent process from its Student-t predictive.
pub fn sample_new_latents<T: Scalar, R: Rng + ?Sized>(
    s: &ClassSuffInfo<T>,
    design: &Matrix<T>,
    point: &[T],
    rng: &mut R,
) -> Result<Vec<T>> {
    s.per_class
        .iter()
        .map(|c| predict(c, design, point).map(|pt| pt.sample(rng)))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GibbsStats {
    pub proposed: usize,
    pub accepted: usize,
}

impl GibbsStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Random partition of `0..t` into blocks of at most `fold_size` indices.
pub fn random_blocks<R: Rng + ?Sized>(t: usize, fold_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..t).collect();
    idx.shuffle(rng);
    idx.chunks(fold_size.max(1))
        .map(|c| {
            let mut b = c.to_vec();
            b.sort_unstable();
            b
        })
        .collect()
}

/// MH log acceptance ratio for replacing class `m`'s latents on `block`.
///
/// Proposals come from the GP conditional prior, so only the softmax
/// likelihood ratio over the block survives.
pub fn block_log_acceptance<T: Scalar>(
    latents: &[Vec<T>],
    m: usize,
    block: &[usize],
    proposal: &[T],
    labels: &[usize],
) -> T {
    let mut log_a = T::zero();
    for (r, &i) in block.iter().enumerate() {
        let mut cur = full_latents(latents.iter().map(|row| row[i]));
        let old = log_softmax_prob(&cur, labels[i]);
        cur[m] = proposal[r];
        log_a += log_softmax_prob(&cur, labels[i]) - old;
    }
    log_a
}

/// One randomly blocked MH-within-Gibbs sweep over all latents, followed by a
/// refresh of each class's `ψ` (correlation matrices are left untouched).
pub fn gibbs_sweep<T: Scalar, R: Rng + ?Sized>(
    s: &ClassSuffInfo<T>,
    design: &Matrix<T>,
    labels: &[usize],
    fold_size: usize,
    rng: &mut R,
) -> Result<(ClassSuffInfo<T>, GibbsStats)> {
    let t = s.t();
    if labels.len() != t || design.rows() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&c| c >= s.n_classes) {
        return Err(Error::InvalidParameter(format!("label {bad} out of range")));
    }
    let mut stats = GibbsStats::default();
    if t == 0 {
        return Ok((s.clone(), stats));
    }
    let blocks = random_blocks(t, fold_size, rng);
    let mut latents = s.latents.clone();
    for m in 0..s.n_classes - 1 {
        for block in &blocks {
            let bp = block_predict(&s.per_class[m], design, &latents[m], block)?;
            let proposal = bp.sample(rng)?;
            let log_a = block_log_acceptance(&latents, m, block, &proposal, labels);
            stats.proposed += 1;
            let u: f64 = rng.random();
            if log_a >= T::zero() || T::lit(u.ln()) < log_a {
                stats.accepted += 1;
                for (&i, &v) in block.iter().zip(&proposal) {
                    latents[m][i] = v;
                }
            }
        }
    }
    Ok((s.with_latents(design, latents)?, stats))
}

/// [`gibbs_sweep`] without the acceptance bookkeeping.
pub fn gibbs_propagate<T: Scalar, R: Rng + ?Sized>(
    s: &ClassSuffInfo<T>,
    design: &Matrix<T>,
    labels: &[usize],
    fold_size: usize,
    rng: &mut R,
) -> Result<ClassSuffInfo<T>> {
    gibbs_sweep(s, design, labels, fold_size, rng).map(|(s, _)| s)
}
