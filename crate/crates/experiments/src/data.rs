//! Test functions and the affine maps between raw and model coordinates.

use std::f64::consts::PI;

use gpsmc::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

/// Input range of the sinusoid study.
pub const SINUSOID_DOMAIN: (f64, f64) = (0.0, 9.6);
/// Per-coordinate input range of the two-dimensional studies.
pub const EXP2D_DOMAIN: (f64, f64) = (-2.0, 2.0);

/// `sin(πx/5) + cos(4πx/5)/5`.
pub fn gen_sinusoid(x: f64) -> f64 {
    (PI * x / 5.0).sin() + 0.2 * (4.0 * PI * x / 5.0).cos()
}

/// `x₁ exp(-x₁² - x₂²)`.
pub fn gen_exp2d(x: &[f64]) -> f64 {
    x[0] * (-x[0] * x[0] - x[1] * x[1]).exp()
}

/// Global minimizer of [`gen_exp2d`].
pub fn exp2d_minimizer() -> [f64; 2] {
    [-(0.5f64).sqrt(), 0.0]
}

/// Class in `{1, 2, 3}` from the sign of the Hessian trace of
/// [`gen_exp2d`], which is the sign of `x₁(x₁² + x₂² − 2)`; the negative
/// region is split at `x₁ = 0`.
pub fn gen_class_labels(x: &[f64]) -> usize {
    let trace_sign = x[0] * (x[0] * x[0] + x[1] * x[1] - 2.0);
    match (trace_sign < 0.0, x[0] <= 0.0) {
        (true, true) => 1,
        (true, false) => 3,
        (false, _) => 2,
    }
}

/// Per-coordinate map from a box to `[0, 1]^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl InputScaling {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(l, h)| !(h > l)) {
            return Err(ExperimentError::Config(
                "input bounds must satisfy lo < hi".into(),
            ));
        }
        Ok(Self { lo, hi })
    }

    /// The same interval in every one of `p` coordinates.
    pub fn uniform(p: usize, (lo, hi): (f64, f64)) -> Self {
        Self {
            lo: vec![lo; p],
            hi: vec![hi; p],
        }
    }

    /// Bounding box of the rows of `x`; constant columns get a unit width.
    pub fn from_data(x: &Matrix<f64>) -> Self {
        let p = x.cols();
        let mut lo = vec![f64::INFINITY; p];
        let mut hi = vec![f64::NEG_INFINITY; p];
        for row in x.row_iter() {
            for j in 0..p {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        for j in 0..p {
            if !(hi[j] > lo[j]) {
                hi[j] = lo[j] + 1.0;
            }
        }
        Self { lo, hi }
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| ((v - l) / (h - l)).clamp(0.0, 1.0))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| l + v * (h - l))
            .collect()
    }

    pub fn matrix_to_unit(&self, x: &Matrix<f64>) -> Matrix<f64> {
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| self.to_unit(r)).collect();
        Matrix::from_rows(&rows).with_width(x.cols())
    }

    pub fn matrix_from_unit(&self, u: &Matrix<f64>) -> Matrix<f64> {
        let rows: Vec<Vec<f64>> = u.row_iter().map(|r| self.from_unit(r)).collect();
        Matrix::from_rows(&rows).with_width(u.cols())
    }
}

trait WithWidth {
    fn with_width(self, cols: usize) -> Self;
}

impl WithWidth for Matrix<f64> {
    /// `from_rows` cannot infer the width of an empty matrix.
    fn with_width(self, cols: usize) -> Self {
        if self.rows() == 0 {
            Matrix::with_cols(cols)
        } else {
            self
        }
    }
}

/// Standardization of responses to mean zero and range one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputScaling {
    pub mean: f64,
    pub range: f64,
}

impl OutputScaling {
    pub fn from_data(y: &[f64]) -> Self {
        let n = y.len().max(1) as f64;
        let mean = y.iter().sum::<f64>() / n;
        let (lo, hi) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        let range = if hi > lo { hi - lo } else { 1.0 };
        Self { mean, range }
    }

    pub fn scale(&self, y: f64) -> f64 {
        (y - self.mean) / self.range
    }

    pub fn unscale(&self, y: f64) -> f64 {
        self.mean + y * self.range
    }
}

/// Raw data together with its model-coordinate image.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledData {
    pub x_raw: Matrix<f64>,
    pub x: Matrix<f64>,
    pub y_raw: Vec<f64>,
    pub y: Vec<f64>,
    pub inputs: InputScaling,
    pub outputs: OutputScaling,
}

impl ScaledData {
    /// Scales `x_raw` with `inputs` (or its bounding box) and standardizes
    /// `y_raw` with its own mean and range.
    pub fn new(x_raw: Matrix<f64>, y_raw: Vec<f64>, inputs: Option<InputScaling>) -> Result<Self> {
        if x_raw.rows() != y_raw.len() {
            return Err(ExperimentError::Config(format!(
                "{} inputs but {} responses",
                x_raw.rows(),
                y_raw.len()
            )));
        }
        let inputs = inputs.unwrap_or_else(|| InputScaling::from_data(&x_raw));
        let outputs = OutputScaling::from_data(&y_raw);
        Ok(Self {
            x: inputs.matrix_to_unit(&x_raw),
            y: y_raw.iter().map(|&v| outputs.scale(v)).collect(),
            x_raw,
            y_raw,
            inputs,
            outputs,
        })
    }
}
