//! Isotropic Gaussian correlation with a nugget, and the correlation matrix
//! bookkeeping (factor, cached inverse, log-determinant) shared by every
//! particle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Cholesky, Matrix};
use crate::scalar::Scalar;

/// Diagonal jitter used for the single retry when a factorization fails.
pub const JITTER: f64 = 1e-8;

/// Range `d` and nugget `g` of `K(x, x') = exp(-‖x - x'‖² / d) + g δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams<T> {
    d: T,
    g: T,
}

impl<T: Scalar> KernelParams<T> {
    pub fn new(d: T, g: T) -> Result<Self> {
        if !(d > T::zero() && d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "range d must be positive, got {d}"
            )));
        }
        if !(g > T::zero() && g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "nugget g must be positive, got {g}"
            )));
        }
        Ok(Self { d, g })
    }

    #[inline]
    pub fn d(&self) -> T {
        self.d
    }

    #[inline]
    pub fn g(&self) -> T {
        self.g
    }

    /// Correlation of a point with itself: `1 + g`.
    #[inline]
    pub fn self_corr(&self) -> T {
        T::one() + self.g
    }
}

#[inline]
pub(crate) fn sq_dist<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| {
        let diff = a - b;
        acc + diff * diff
    })
}

/// Nugget-free part `K*(x, x') = exp(-‖x - x'‖² / d)`.
#[inline]
pub(crate) fn corr_star<T: Scalar>(x: &[T], y: &[T], d: T) -> T {
    (-sq_dist(x, y) / d).exp()
}

/// `K(x, x')`, adding the nugget when the two points coincide exactly.
pub fn corr<T: Scalar>(x: &[T], y: &[T], params: &KernelParams<T>) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let k = corr_star(x, y, params.d);
    Ok(if x == y { k + params.g } else { k })
}

/// `k(x)`: nugget-free correlations between `point` and each design row.
///
/// The nugget never enters here because a new observation is a distinct
/// index even when it sits at an existing input.
pub fn cross_corr<T: Scalar>(design: &Matrix<T>, point: &[T], params: &KernelParams<T>) -> Vec<T> {
    design
        .row_iter()
        .map(|r| corr_star(r, point, params.d))
        .collect()
}

/// Correlation matrix of a design together with its Cholesky factor, cached
/// inverse and log-determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrMatrix<T> {
    params: KernelParams<T>,
    values: Matrix<T>,
    chol: Cholesky<T>,
    inverse: Matrix<T>,
    log_det: T,
}

impl<T: Scalar> CorrMatrix<T> {
    pub fn params(&self) -> &KernelParams<T> {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn inverse(&self) -> &Matrix<T> {
        &self.inverse
    }

    pub fn cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }

    pub fn log_det(&self) -> T {
        self.log_det
    }

    /// Correlation matrix of an empty design.
    pub fn empty(params: KernelParams<T>) -> Self {
        Self {
            params,
            values: Matrix::zeros(0, 0),
            chol: Cholesky::from_factor(Matrix::zeros(0, 0)),
            inverse: Matrix::zeros(0, 0),
            log_det: T::zero(),
        }
    }

    /// Appends `point` to the design the matrix was built on.
    ///
    /// `design` must hold exactly the `n` rows `K` was built from.
    pub fn extend_with_point(&self, design: &Matrix<T>, point: &[T]) -> Result<Self> {
        if design.rows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: design.rows(),
            });
        }
        if design.rows() > 0 && design.cols() != point.len() {
            return Err(Error::DimensionMismatch {
                expected: design.cols(),
                found: point.len(),
            });
        }
        let k_new = cross_corr(design, point, &self.params);
        extend_inverse(self, &k_new, self.params.self_corr())
    }
}

/// Builds `K` on the design rows, factorizing with one jittered retry.
pub fn build_corr<T: Scalar>(
    design: &Matrix<T>,
    params: &KernelParams<T>,
) -> Result<CorrMatrix<T>> {
    if design.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "design contains non-finite values".into(),
        ));
    }
    let n = design.rows();
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        values[(i, i)] = params.self_corr();
        for j in 0..i {
            let k = corr_star(design.row(i), design.row(j), params.d);
            values[(i, j)] = k;
            values[(j, i)] = k;
        }
    }
    let chol = match Cholesky::new(&values) {
        Ok(c) => c,
        Err(_) => {
            for i in 0..n {
                values[(i, i)] += T::lit(JITTER);
            }
            Cholesky::new(&values)?
        }
    };
    let inverse = chol.inverse();
    let log_det = chol.log_det();
    Ok(CorrMatrix {
        params: *params,
        values,
        chol,
        inverse,
        log_det,
    })
}

/// Grows `K` by one point in `O(t²)` using the partition inverse.
///
/// With `v = K⁻¹k` and `μ = 1 / (k_self - kᵀv)`, the new inverse is
/// `[[K⁻¹ + μ v vᵀ, -μ v], [-μ vᵀ, μ]]` and `log|K'| = log|K| - log μ`.
/// The Cholesky factor is extended alongside by a forward solve.
pub fn extend_inverse<T: Scalar>(
    k: &CorrMatrix<T>,
    k_new: &[T],
    k_self: T,
) -> Result<CorrMatrix<T>> {
    let t = k.n();
    if k_new.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: k_new.len(),
        });
    }
    let v = k.inverse.mul_vec(k_new)?;
    let cond_var = k_self - dot(k_new, &v);
    if !(cond_var > T::zero()) || !cond_var.is_finite() {
        return Err(Error::LostPositiveDefiniteness(cond_var.as_f64()));
    }
    let mu = T::one() / cond_var;

    let mut w = k_new.to_vec();
    k.chol.forward_in_place(&mut w);
    let diag_sq = k_self - dot(&w, &w);
    if !(diag_sq > T::zero()) {
        return Err(Error::LostPositiveDefiniteness(diag_sq.as_f64()));
    }

    let m = t + 1;
    let mut values = Matrix::zeros(m, m);
    let mut inverse = Matrix::zeros(m, m);
    let mut factor = Matrix::zeros(m, m);
    let old_l = k.chol.factor();
    for i in 0..t {
        values.row_mut(i)[..t].copy_from_slice(k.values.row(i));
        values[(i, t)] = k_new[i];
        values[(t, i)] = k_new[i];

        let mv = mu * v[i];
        let inv_row = inverse.row_mut(i);
        for ((o, &a), &vj) in inv_row[..t].iter_mut().zip(k.inverse.row(i)).zip(&v) {
            *o = a + mv * vj;
        }
        inv_row[t] = -mv;
        inverse[(t, i)] = -mv;

        factor.row_mut(i)[..=i].copy_from_slice(&old_l.row(i)[..=i]);
        factor[(t, i)] = w[i];
    }
    values[(t, t)] = k_self;
    inverse[(t, t)] = mu;
    factor[(t, t)] = diag_sq.sqrt();

    Ok(CorrMatrix {
        params: k.params,
        values,
        chol: Cholesky::from_factor(factor),
        inverse,
        log_det: k.log_det - mu.ln(),
    })
}

/// `K⁻¹ B` through the Cholesky factor.
pub fn block_solve<T: Scalar>(k: &CorrMatrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    k.chol.solve_mat(b)
}
