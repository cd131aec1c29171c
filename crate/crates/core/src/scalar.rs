//! The floating point abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the GP machinery is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot hold
    /// finite `f64` values, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `ln Γ(x)`, evaluated in double precision.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    T::lit(statrs::function::gamma::ln_gamma(x.as_f64()))
}

/// CDF of the standard Student-t distribution with `nu` degrees of freedom.
pub fn student_t_cdf<T: Scalar>(x: T, nu: T) -> T {
    let (x, nu) = (x.as_f64(), nu.as_f64());
    if x.is_infinite() {
        return T::lit(if x > 0.0 { 1.0 } else { 0.0 });
    }
    let z = nu / (nu + x * x);
    let tail = 0.5 * statrs::function::beta::beta_reg(0.5 * nu, 0.5, z);
    T::lit(if x >= 0.0 { 1.0 - tail } else { tail })
}

/// Log density of the standard Student-t distribution.
pub fn student_t_ln_pdf<T: Scalar>(x: T, nu: T) -> T {
    let half = T::lit(0.5);
    ln_gamma((nu + T::one()) * half)
        - ln_gamma(nu * half)
        - half * (nu * T::lit(std::f64::consts::PI)).ln()
        - (nu + T::one()) * half * (x * x / nu).ln_1p()
}

/// `ln(Σ exp(v))` with max subtraction.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |m, v| if v > m { v } else { m });
    if !max.is_finite() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_cdf_symmetry_and_center() {
        assert!((student_t_cdf(0.0_f64, 3.0) - 0.5).abs() < 1e-15);
        let a = student_t_cdf(1.3_f64, 4.0);
        let b = student_t_cdf(-1.3_f64, 4.0);
        assert!((a + b - 1.0).abs() < 1e-14);
        // t_1 is Cauchy: F(1) = 3/4.
        assert!((student_t_cdf(1.0_f64, 1.0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn t_pdf_cauchy() {
        let v = student_t_ln_pdf(0.0_f64, 1.0).exp();
        assert!((v - 1.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn lse_handles_neg_inf() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0_f64, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
