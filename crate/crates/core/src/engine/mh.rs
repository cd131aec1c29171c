//! Metropolis-Hastings moves on the kernel parameters `(d, g)`.

use rand::Rng;

use crate::error::Result;
use crate::gp::{compute_suffstats, MeanFn, PriorSpec, RegressionSuffInfo};
use crate::kernel::{build_corr, CorrMatrix, KernelParams};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::config::{EngineConfig, Window};

/// Sufficient information for `params` on `(design, y)`, building `K` from scratch.
pub fn suffinfo_for<T: Scalar>(
    params: &KernelParams<T>,
    design: &Matrix<T>,
    y: &[T],
    prior: PriorSpec<T>,
    mean: MeanFn,
) -> Result<RegressionSuffInfo<T>> {
    let k = if design.rows() == 0 {
        CorrMatrix::empty(*params)
    } else {
        build_corr(design, params)?
    };
    compute_suffstats(k, design, y, prior, mean)
}

/// Log acceptance ratio of a sliding-window move from `current` to `proposed`.
///
/// The window scales with the current value, so `q(v* | v) = 1 / (v w)` and
/// the Hastings correction contributes `log(v / v*)` for each parameter.
pub fn window_log_ratio<T: Scalar>(
    current: &RegressionSuffInfo<T>,
    proposed: &RegressionSuffInfo<T>,
) -> T {
    let (c, p) = (current.params(), proposed.params());
    proposed.log_posterior() - current.log_posterior() + (c.d() / p.d()).ln() + (c.g() / p.g()).ln()
}

fn accept<T: Scalar, R: Rng + ?Sized>(log_ratio: T, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= T::zero() {
        return true;
    }
    let u: f64 = rng.random();
    T::lit(u.ln()) < log_ratio
}

/// One joint random-walk MH step on `(d, g)`. A proposal whose correlation
/// matrix cannot be factorized is rejected.
pub fn mh_step<T: Scalar, R: Rng + ?Sized>(
    s: &RegressionSuffInfo<T>,
    design: &Matrix<T>,
    y: &[T],
    window: Window<T>,
    rng: &mut R,
) -> Result<(RegressionSuffInfo<T>, bool)> {
    let cur = s.params();
    let d = window.propose(cur.d(), rng);
    let g = window.propose(cur.g(), rng);
    let u: f64 = rng.random();
    let Ok(params) = KernelParams::new(d, g) else {
        return Ok((s.clone(), false));
    };
    let Ok(proposed) = suffinfo_for(&params, design, y, *s.prior(), s.mean_fn()) else {
        return Ok((s.clone(), false));
    };
    let log_ratio = window_log_ratio(s, &proposed);
    let accepted = !log_ratio.is_nan() && (log_ratio >= T::zero() || T::lit(u.ln()) < log_ratio);
    Ok(if accepted {
        (proposed, true)
    } else {
        (s.clone(), false)
    })
}

/// One independence MH step with proposals from the kernel prior; the prior
/// cancels and only the marginal likelihood ratio remains.
pub fn independence_step<T: Scalar, R: Rng + ?Sized>(
    s: &RegressionSuffInfo<T>,
    design: &Matrix<T>,
    y: &[T],
    rng: &mut R,
) -> (RegressionSuffInfo<T>, bool) {
    let params = s.prior().sample_kernel(rng);
    let Ok(proposed) = suffinfo_for(&params, design, y, *s.prior(), s.mean_fn()) else {
        return (s.clone(), false);
    };
    let log_ratio = crate::gp::log_marginal(&proposed) - crate::gp::log_marginal(s);
    if accept(log_ratio, rng) {
        (proposed, true)
    } else {
        (s.clone(), false)
    }
}

/// Batch random-walk MCMC over `(d, g)` on the full data with a fixed window.
/// Returns `iters / thin` states; the chain starts at the prior means.
pub fn run_mcmc<T: Scalar, R: Rng + ?Sized>(
    design: &Matrix<T>,
    y: &[T],
    iters: usize,
    thin: usize,
    config: &EngineConfig<T>,
    mean: MeanFn,
    rng: &mut R,
) -> Result<Vec<RegressionSuffInfo<T>>> {
    let thin = thin.max(1);
    let prior = config.prior;
    let start = KernelParams::new(T::one() / prior.lambda_d, T::one() / prior.lambda_g)?;
    let mut state = suffinfo_for(&start, design, y, prior, mean)?;
    let mut out = Vec::with_capacity(iters / thin);
    for it in 1..=iters {
        state = mh_step(&state, design, y, config.window, rng)?.0;
        if it % thin == 0 {
            out.push(state.clone());
        }
    }
    Ok(out)
}
