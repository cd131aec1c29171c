//! Acquisition functions and space-filling designs.

mod ei;
mod entropy;
mod space_filling;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub use ei::{
    choose_next_ei, expected_improvement, f_min, map_candidate, posterior_mean, FMinMode,
};
pub use entropy::{
    bvsb_entropy, choose_next_entropy, entropy, posterior_class_probs, smooth_scores, Smoothing,
};
pub use space_filling::{lhd, med};

/// Where a candidate set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    FreshLhd,
    FixedPool,
    Augmented,
}

/// Candidate inputs in the scaled domain `[0, 1]^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet<T> {
    points: Matrix<T>,
    provenance: Provenance,
}

impl<T: Scalar> CandidateSet<T> {
    pub fn new(points: Matrix<T>, provenance: Provenance) -> Result<Self> {
        let unit = |v: &T| *v >= T::zero() && *v <= T::one();
        if !points.as_slice().iter().all(unit) {
            return Err(Error::InvalidParameter(
                "candidates must lie in [0, 1]^p".into(),
            ));
        }
        Ok(Self { points, provenance })
    }

    pub fn points(&self) -> &Matrix<T> {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[T] {
        self.points.row(i)
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    /// Removes and returns candidate `i`, preserving the order of the rest.
    pub fn remove(&mut self, i: usize) -> Vec<T> {
        let point = self.points.row(i).to_vec();
        let keep: Vec<usize> = (0..self.len()).filter(|&j| j != i).collect();
        self.points = self.points.select_rows(&keep);
        point
    }

    /// A copy with `point` appended.
    pub fn augmented(&self, point: &[T]) -> Result<Self> {
        let mut points = self.points.clone();
        points.push_row(point)?;
        Self::new(points, Provenance::Augmented)
    }
}

/// The outcome of one acquisition round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionRecord<T> {
    pub chosen: Vec<T>,
    /// Index of `chosen` within the scored candidates.
    pub index: usize,
    pub score: T,
    /// MAP-particle minimizer appended to the candidates, if any.
    pub x_star: Option<Vec<T>>,
    pub per_candidate: Vec<T>,
}
