use rand::seq::SliceRandom;
use rand::Rng;

use crate::classify::argmax;
use crate::error::{Error, Result};
use crate::kernel::corr_star;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::{CandidateSet, Provenance};

/// Latin hypercube design: in every dimension each stratum `[k/n, (k+1)/n)`
/// holds exactly one point, jittered uniformly within it.
pub fn lhd<T: Scalar, R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<CandidateSet<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "LHD needs at least one point".into(),
        ));
    }
    let mut points = Matrix::zeros(n, p);
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..p {
        strata.shuffle(rng);
        for (i, &k) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            let v = ((k as f64 + u) / n as f64).min(1.0 - f64::EPSILON);
            points[(i, j)] = T::lit(v);
        }
    }
    CandidateSet::new(points, Provenance::FreshLhd)
}

/// Greedy maximum-entropy subset of `pool`: starting from the point nearest
/// the centroid, repeatedly add the point with the largest conditional
/// variance under the nugget-free correlation with range `d_ref`, which is the
/// point that most increases the log determinant.
pub fn med<T: Scalar>(n: usize, pool: &CandidateSet<T>, d_ref: T) -> Result<CandidateSet<T>> {
    let m = pool.len();
    if m < n {
        return Err(Error::PoolExhausted {
            requested: n,
            available: m,
        });
    }
    if !(d_ref > T::zero()) {
        return Err(Error::InvalidParameter("d_ref must be positive".into()));
    }
    let p = pool.dim();
    let mut selected = Vec::with_capacity(n);
    if n > 0 {
        let inv_m = T::one() / T::from_usize_lossy(m);
        let centroid: Vec<T> = (0..p)
            .map(|j| (0..m).map(|i| pool.point(i)[j]).sum::<T>() * inv_m)
            .collect();
        let closeness: Vec<T> = (0..m)
            .map(|i| -crate::kernel::sq_dist(pool.point(i), &centroid))
            .collect();
        selected.push(argmax(&closeness));
    }
    // Pivoted Cholesky: `var[i]` is the conditional variance of candidate i
    // given the selected set and `factor[i]` its row of the partial factor.
    let mut var = vec![T::one(); m];
    let mut factor: Vec<Vec<T>> = vec![Vec::with_capacity(n); m];
    let floor = T::lit(1e-14);
    while let Some(&s) = selected.last() {
        let pivot = var[s].sqrt();
        for i in 0..m {
            let c = if i == s {
                pivot
            } else {
                let dot: T = factor[i].iter().zip(&factor[s]).map(|(&a, &b)| a * b).sum();
                (corr_star(pool.point(i), pool.point(s), d_ref) - dot) / pivot
            };
            factor[i].push(c);
            var[i] -= c * c;
        }
        for &k in &selected {
            var[k] = T::neg_infinity();
        }
        if selected.len() == n {
            break;
        }
        let next = argmax(&var);
        if !(var[next] > floor) {
            return Err(Error::PoolExhausted {
                requested: n,
                available: selected.len(),
            });
        }
        selected.push(next);
    }
    CandidateSet::new(pool.points().select_rows(&selected), Provenance::FixedPool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lhd_one_point_per_quartile() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d: CandidateSet<f64> = lhd(4, 1, &mut rng).unwrap();
        let mut v: Vec<f64> = (0..4).map(|i| d.point(i)[0]).collect();
        v.sort_by(f64::total_cmp);
        for (k, x) in v.iter().enumerate() {
            assert!((k as f64) / 4.0 <= *x && *x < (k as f64 + 1.0) / 4.0);
        }
        assert!(lhd::<f64, _>(0, 2, &mut rng).is_err());
    }

    #[test]
    fn med_second_point_is_farthest_from_seed() {
        let pool: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64 / 10.0]).collect();
        let pool = CandidateSet::new(Matrix::from_rows(&pool), Provenance::FixedPool).unwrap();
        let d = med(2, &pool, 0.5).unwrap();
        assert_eq!(d.point(0), &[0.5]);
        assert_eq!(d.point(1), &[0.0]);
    }

    #[test]
    fn med_skips_duplicates_and_reports_exhaustion() {
        let rows = vec![vec![0.2, 0.2], vec![0.2, 0.2], vec![0.8, 0.3]];
        let pool = CandidateSet::new(Matrix::from_rows(&rows), Provenance::FixedPool).unwrap();
        assert_eq!(med(2, &pool, 0.5).unwrap().len(), 2);
        assert!(matches!(
            med(3, &pool, 0.5),
            Err(Error::PoolExhausted { .. })
        ));
        assert!(matches!(
            med(4, &pool, 0.5),
            Err(Error::PoolExhausted { .. })
        ));
    }
}
