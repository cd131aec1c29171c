//! GP regression with `β ∝ 1` and `σ² ~ IG(a/2, b/2)` integrated out.
//!
//! Given the correlation matrix `K` for a fixed kernel parameterization, the
//! posterior depends on the data only through
//!
//! * `V_β = (Fᵀ K⁻¹ F)⁻¹`
//! * `β̃ = V_β Fᵀ K⁻¹ Y`
//! * `ψ = Yᵀ K⁻¹ Y - β̃ᵀ V_β⁻¹ β̃`
//!
//! which [`RegressionSuffInfo`] caches alongside `K`. Predictions are
//! Student-t with `a + t - q` degrees of freedom, where `q` is the number of
//! mean basis functions (`p + 1` for a linear mean, `0` for a zero mean).

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{corr_star, cross_corr, CorrMatrix, KernelParams, JITTER};
use crate::matrix::{dot, Cholesky, Matrix};
use crate::scalar::{ln_gamma, student_t_ln_pdf, Scalar};

/// Mean basis `f(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MeanFn {
    /// `f(x) = [1, xᵀ]`.
    #[default]
    Linear,
    /// `f(x) = 0`, no regression coefficients at all.
    Zero,
}

impl MeanFn {
    /// Number of basis functions for inputs of dimension `p`.
    pub fn basis_len(self, p: usize) -> usize {
        match self {
            MeanFn::Linear => p + 1,
            MeanFn::Zero => 0,
        }
    }

    pub fn basis<T: Scalar>(self, x: &[T]) -> Vec<T> {
        match self {
            MeanFn::Linear => std::iter::once(T::one()).chain(x.iter().copied()).collect(),
            MeanFn::Zero => Vec::new(),
        }
    }

    pub fn design_matrix<T: Scalar>(self, x: &Matrix<T>) -> Matrix<T> {
        let q = self.basis_len(x.cols());
        let mut f = Matrix::with_cols(q);
        for row in x.row_iter() {
            f.push_row(&self.basis(row)).expect("basis width");
        }
        f
    }
}

/// Inverse-gamma hyperparameters for `σ²` and exponential rates for `d`, `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec<T> {
    pub a: T,
    pub b: T,
    pub lambda_d: T,
    pub lambda_g: T,
}

impl<T: Scalar> PriorSpec<T> {
    pub fn new(a: T, b: T, lambda_d: T, lambda_g: T) -> Result<Self> {
        let zero = T::zero();
        let both_zero = a == zero && b == zero;
        let both_pos = a > zero && b > zero && a.is_finite() && b.is_finite();
        if !(both_zero || both_pos) {
            return Err(Error::InvalidParameter(format!(
                "(a, b) must both be zero or both positive, got ({a}, {b})"
            )));
        }
        if !(lambda_d > zero && lambda_g > zero) {
            return Err(Error::InvalidParameter(
                "exponential rates must be positive".into(),
            ));
        }
        Ok(Self {
            a,
            b,
            lambda_d,
            lambda_g,
        })
    }

    /// Scale-invariant `a = b = 0` with `Exp(5)` on both kernel parameters.
    pub fn improper() -> Self {
        Self::new(T::zero(), T::zero(), T::lit(5.0), T::lit(5.0)).expect("valid default")
    }

    /// `(a, b) = (5, 10)` with `Exp(5)` kernel priors; the classification default.
    pub fn proper_default() -> Self {
        Self::new(T::lit(5.0), T::lit(10.0), T::lit(5.0), T::lit(5.0)).expect("valid default")
    }

    pub fn is_proper(&self) -> bool {
        self.a > T::zero()
    }

    /// Log density of the independent exponential priors on `(d, g)`.
    pub fn log_kernel_prior(&self, params: &KernelParams<T>) -> T {
        self.lambda_d.ln() - self.lambda_d * params.d() + self.lambda_g.ln()
            - self.lambda_g * params.g()
    }

    pub fn sample_kernel<R: Rng + ?Sized>(&self, rng: &mut R) -> KernelParams<T> {
        let ed = Exp::new(self.lambda_d.as_f64()).expect("positive rate");
        let eg = Exp::new(self.lambda_g.as_f64()).expect("positive rate");
        loop {
            let d = T::lit(ed.sample(rng));
            let g = T::lit(eg.sample(rng));
            // An exact zero draw (or f32 underflow) is not a valid parameter.
            if let Ok(p) = KernelParams::new(d, g) {
                return p;
            }
        }
    }
}

/// One particle's regression sufficient information.
#[derive(Clone, Debug)]
pub struct RegressionSuffInfo<T> {
    k: CorrMatrix<T>,
    prior: PriorSpec<T>,
    mean: MeanFn,
    beta_tilde: Vec<T>,
    v_beta: Matrix<T>,
    v_beta_log_det: T,
    psi: T,
    /// `K⁻¹(Y - F β̃)`
    alpha: Vec<T>,
    /// `K⁻¹ F`
    kinv_f: Matrix<T>,
}

impl<T: Scalar> RegressionSuffInfo<T> {
    pub fn params(&self) -> &KernelParams<T> {
        self.k.params()
    }

    pub fn corr(&self) -> &CorrMatrix<T> {
        &self.k
    }

    pub fn prior(&self) -> &PriorSpec<T> {
        &self.prior
    }

    pub fn mean_fn(&self) -> MeanFn {
        self.mean
    }

    pub fn beta_tilde(&self) -> &[T] {
        &self.beta_tilde
    }

    pub fn v_beta(&self) -> &Matrix<T> {
        &self.v_beta
    }

    pub fn psi(&self) -> T {
        self.psi
    }

    pub fn t(&self) -> usize {
        self.k.n()
    }

    pub fn q(&self) -> usize {
        self.beta_tilde.len()
    }

    /// Predictive degrees of freedom `a + t - q`.
    pub fn dof(&self) -> T {
        self.prior.a + T::from_usize_lossy(self.t()) - T::from_usize_lossy(self.q())
    }

    /// Unnormalized log posterior of the kernel parameters.
    pub fn log_posterior(&self) -> T {
        log_marginal(self) + self.prior.log_kernel_prior(self.params())
    }
}

fn check_propriety(t: usize, q: usize, prior_proper: bool) -> Result<()> {
    if !prior_proper && t <= q {
        return Err(Error::Improper {
            count: t,
            required: q,
        });
    }
    Ok(())
}

/// Computes `β̃`, `V_β` and `ψ` from a correlation matrix and the data.
pub fn compute_suffstats<T: Scalar>(
    k: CorrMatrix<T>,
    design: &Matrix<T>,
    y: &[T],
    prior: PriorSpec<T>,
    mean: MeanFn,
) -> Result<RegressionSuffInfo<T>> {
    let t = k.n();
    if design.rows() != t || y.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: if design.rows() != t {
                design.rows()
            } else {
                y.len()
            },
        });
    }
    let q = mean.basis_len(design.cols());
    check_propriety(t, q, prior.is_proper())?;

    let f = mean.design_matrix(design);
    let kinv = k.inverse();
    let kinv_f = kinv.matmul(&f)?;
    let kinv_y = kinv.mul_vec(y)?;
    let yky = dot(y, &kinv_y);
    let fky = f.tr_mul_vec(&kinv_y)?;

    let (beta_tilde, v_beta, v_beta_log_det) = if q == 0 {
        (Vec::new(), Matrix::zeros(0, 0), T::zero())
    } else {
        let mut fkf = f.transpose().matmul(&kinv_f)?;
        for i in 0..q {
            for j in 0..i {
                let s = T::lit(0.5) * (fkf[(i, j)] + fkf[(j, i)]);
                fkf[(i, j)] = s;
                fkf[(j, i)] = s;
            }
        }
        let chol = Cholesky::new(&fkf).map_err(|_| Error::SingularDesign)?;
        let max_diag = (0..q).map(|i| fkf[(i, i)]).fold(T::zero(), T::max);
        let min_pivot = (0..q)
            .map(|i| chol.factor()[(i, i)].powi(2))
            .fold(T::infinity(), T::min);
        if min_pivot < T::lit(1e-12) * max_diag {
            return Err(Error::SingularDesign);
        }
        let beta = chol.solve_vec(&fky)?;
        (beta, chol.inverse(), -chol.log_det())
    };

    let mut psi = yky - dot(&beta_tilde, &fky);
    if psi < T::zero() {
        if psi >= -T::lit(1e-10) * (T::one() + yky.abs()) {
            psi = T::zero();
        } else {
            return Err(Error::NegativeVariance(psi.as_f64()));
        }
    }
    let fb = kinv_f
        .mul_vec(&beta_tilde)
        .unwrap_or_else(|_| vec![T::zero(); t]);
    let alpha = if q == 0 {
        kinv_y
    } else {
        kinv_y.iter().zip(&fb).map(|(&a, &b)| a - b).collect()
    };

    Ok(RegressionSuffInfo {
        k,
        prior,
        mean,
        beta_tilde,
        v_beta,
        v_beta_log_det,
        psi,
        alpha,
        kinv_f,
    })
}

/// Log of the `K`-conditional marginal density of `Y` (kernel prior excluded):
///
/// `½ log(|V_β|/|K|) - ((t-q)/2) log 2π + (a/2) log(b/2) - log Γ(a/2)
///  + log Γ((a+t-q)/2) - ((a+t-q)/2) log((b+ψ)/2)`,
///
/// with the `a`-only normalizing terms dropped when `a = b = 0`.
pub fn log_marginal<T: Scalar>(s: &RegressionSuffInfo<T>) -> T {
    let half = T::lit(0.5);
    let t = T::from_usize_lossy(s.t());
    let q = T::from_usize_lossy(s.q());
    let a = s.prior.a;
    let b = s.prior.b;
    let shape = half * (a + t - q);
    let mut lm = half * (s.v_beta_log_det - s.k.log_det())
        - half * (t - q) * T::lit((2.0 * std::f64::consts::PI).ln());
    if s.prior.is_proper() {
        lm += half * a * (half * b).ln() - ln_gamma(half * a);
    }
    if shape > T::zero() {
        lm += ln_gamma(shape) - shape * (half * (b + s.psi)).ln();
    }
    lm
}

/// Location-scale Student-t predictive: `mean`, squared scale, and dof.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveT<T> {
    pub mean: T,
    pub scale: T,
    pub dof: T,
}

impl<T: Scalar> PredictiveT<T> {
    pub fn sd(&self) -> T {
        self.scale.sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let z: f64 = rng.sample(StandardNormal);
        let w = ChiSquared::new(self.dof.as_f64())
            .expect("positive dof")
            .sample(rng);
        let draw = z / (w / self.dof.as_f64()).sqrt();
        self.mean + self.sd() * T::lit(draw)
    }

    /// Variance of the distribution, `scale · ν/(ν-2)`, finite for `ν > 2`.
    pub fn variance(&self) -> Option<T> {
        let two = T::lit(2.0);
        (self.dof > two).then(|| self.scale * self.dof / (self.dof - two))
    }
}

pub fn predict_log_density<T: Scalar>(pt: &PredictiveT<T>, y: T) -> T {
    let sd = pt.sd();
    student_t_ln_pdf((y - pt.mean) / sd, pt.dof) - sd.ln()
}

pub fn predict_density<T: Scalar>(pt: &PredictiveT<T>, y: T) -> T {
    predict_log_density(pt, y).exp()
}

/// Clamp tiny negative variances from round-off; reject real PD loss.
fn clamp_variance<T: Scalar>(c: T) -> Result<T> {
    if c < -T::lit(1e-10) || c.is_nan() {
        return Err(Error::NegativeVariance(c.as_f64()));
    }
    Ok(c.max(T::lit(1e-12)))
}

/// Student-t predictive for a new observation at `point`.
///
/// The scale includes the `β` uncertainty term `hᵀ V_β h` with
/// `h = f(x) - Fᵀ K⁻¹ k(x)`, which is what makes the predictive density
/// exactly the ratio of consecutive marginal likelihoods.
pub fn predict<T: Scalar>(
    s: &RegressionSuffInfo<T>,
    design: &Matrix<T>,
    point: &[T],
) -> Result<PredictiveT<T>> {
    if design.rows() != s.t() {
        return Err(Error::DimensionMismatch {
            expected: s.t(),
            found: design.rows(),
        });
    }
    if s.t() > 0 && design.cols() != point.len() {
        return Err(Error::DimensionMismatch {
            expected: design.cols(),
            found: point.len(),
        });
    }
    let dof = s.dof();
    if !(dof > T::zero()) {
        return Err(Error::Improper {
            count: s.t(),
            required: s.q(),
        });
    }
    let k = cross_corr(design, point, s.params());
    let f = s.mean.basis(point);
    let mean = dot(&f, &s.beta_tilde) + dot(&k, &s.alpha);

    let kinv_k = s.k.inverse().mul_vec(&k)?;
    let mut c = s.params().self_corr() - dot(&k, &kinv_k);
    if s.q() > 0 {
        let h: Vec<T> = f
            .iter()
            .zip(s.kinv_f.tr_mul_vec(&k)?)
            .map(|(&fi, ki)| fi - ki)
            .collect();
        c += dot(&h, &s.v_beta.mul_vec(&h)?);
    }
    let c = clamp_variance(c)?;
    Ok(PredictiveT {
        mean,
        scale: (s.prior.b + s.psi) * c / dof,
        dof,
    })
}

/// Predictive mean only, `O(t)` per call.
pub fn predict_mean<T: Scalar>(s: &RegressionSuffInfo<T>, design: &Matrix<T>, point: &[T]) -> T {
    let f = s.mean.basis(point);
    let d = s.params().d();
    dot(&f, &s.beta_tilde)
        + design
            .row_iter()
            .zip(&s.alpha)
            .map(|(r, &a)| corr_star(r, point, d) * a)
            .sum::<T>()
}

/// Multivariate Student-t for a block of outputs given the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPredictive<T> {
    pub mean: Vec<T>,
    pub scale: Matrix<T>,
    pub dof: T,
}

impl<T: Scalar> BlockPredictive<T> {
    /// Joint draw `mean + L z / sqrt(w/ν)` with `L Lᵀ = scale`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<T>> {
        let chol = factor_with_jitter(&self.scale)?;
        let n = self.mean.len();
        let z: Vec<T> = (0..n)
            .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let w = ChiSquared::new(self.dof.as_f64())
            .expect("positive dof")
            .sample(rng);
        let mix = T::lit((self.dof.as_f64() / w).sqrt());
        let l = chol.factor();
        Ok((0..n)
            .map(|i| self.mean[i] + mix * dot(&l.row(i)[..=i], &z[..=i]))
            .collect())
    }
}

fn factor_with_jitter<T: Scalar>(m: &Matrix<T>) -> Result<Cholesky<T>> {
    Cholesky::new(m).or_else(|_| {
        let mut j = m.clone();
        for i in 0..j.rows() {
            j[(i, i)] += T::lit(JITTER);
        }
        Cholesky::new(&j)
    })
}

/// Conditional predictive of `Y_I` given `Y_{-I}` under the GP prior of `s`.
///
/// Everything is read off the cached precision `P = K⁻¹`:
/// `K_{I,-I} K_{-I,-I}⁻¹ = -P_II⁻¹ P_{I,-I}`, the Schur complement
/// `K_II - K_{I,-I} K_{-I,-I}⁻¹ K_{-I,I} = P_II⁻¹`, and quadratic forms in
/// `K_{-I,-I}⁻¹` follow from the block inverse identity. Cost is `O(t² q)`.
pub fn block_predict<T: Scalar>(
    s: &RegressionSuffInfo<T>,
    design: &Matrix<T>,
    y: &[T],
    block: &[usize],
) -> Result<BlockPredictive<T>> {
    let t = s.t();
    if design.rows() != t || y.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: y.len(),
        });
    }
    let mut in_block = vec![false; t];
    for &i in block {
        if i >= t || in_block[i] {
            return Err(Error::InvalidParameter(format!("bad block index {i}")));
        }
        in_block[i] = true;
    }
    if block.is_empty() {
        return Err(Error::InvalidParameter("empty block".into()));
    }
    let q = s.q();
    let rest = t - block.len();
    check_propriety(rest, q, s.prior.is_proper())?;

    let p = s.k.inverse();
    let p_ii = p.select(block, block);
    let schur = factor_with_jitter(&p_ii)
        .map_err(|_| Error::NotPositiveDefinite("block precision"))?
        .inverse();

    // Columns [Y, F_1..F_q], zeroed on the block, pushed through P.
    let f = s.mean.design_matrix(design);
    let ncol = q + 1;
    let z = Matrix::from_fn(t, ncol, |i, j| if j == 0 { y[i] } else { f[(i, j - 1)] });
    let z_hat = Matrix::from_fn(
        t,
        ncol,
        |i, j| if in_block[i] { T::zero() } else { z[(i, j)] },
    );
    let u = p.matmul(&z_hat)?;
    let u_i = u.select_rows(block);
    let s_u_i = schur.matmul(&u_i)?;
    // Gram matrix of the columns in the K_{-I,-I}^{-1} inner product.
    let mut gram = Matrix::zeros(ncol, ncol);
    for a in 0..ncol {
        for b in 0..=a {
            let mut v = T::zero();
            for i in 0..t {
                if !in_block[i] {
                    v += z[(i, a)] * u[(i, b)];
                }
            }
            for r in 0..block.len() {
                v -= u_i[(r, a)] * s_u_i[(r, b)];
            }
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }

    let (beta, v_beta) = if q == 0 {
        (Vec::new(), Matrix::zeros(0, 0))
    } else {
        let g_ff = Matrix::from_fn(q, q, |i, j| gram[(i + 1, j + 1)]);
        let g_fy: Vec<T> = (1..ncol).map(|j| gram[(j, 0)]).collect();
        let chol = Cholesky::new(&g_ff).map_err(|_| Error::SingularDesign)?;
        (chol.solve_vec(&g_fy)?, chol.inverse())
    };
    let mut psi = gram[(0, 0)] - (0..q).map(|j| beta[j] * gram[(j + 1, 0)]).sum::<T>();
    if psi < T::zero() {
        psi = clamp_variance(psi).map(|_| T::zero())?;
    }

    let m = block.len();
    let mut mean = vec![T::zero(); m];
    let mut h = Matrix::zeros(m, q);
    for r in 0..m {
        let fi = f.row(block[r]);
        let mut v = dot(fi, &beta) - s_u_i[(r, 0)];
        for j in 0..q {
            v += s_u_i[(r, j + 1)] * beta[j];
            h[(r, j)] = fi[j] + s_u_i[(r, j + 1)];
        }
        mean[r] = v;
    }
    let mut cov = schur;
    if q > 0 {
        let hv = h.matmul(&v_beta)?;
        cov = Matrix::from_fn(m, m, |i, j| cov[(i, j)] + dot(hv.row(i), h.row(j)));
    }
    let dof = s.prior.a + T::from_usize_lossy(rest) - T::from_usize_lossy(q);
    let factor = (s.prior.b + psi) / dof;
    Ok(BlockPredictive {
        mean,
        scale: cov.scale(factor),
        dof,
    })
}
