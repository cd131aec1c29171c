#![allow(dead_code, clippy::needless_range_loop)]

use gpsmc::{Matrix, MeanFn, PriorSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kernel evaluated directly, independently of the crate.
pub fn kern(x: &[f64], y: &[f64], d: f64) -> f64 {
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-r2 / d).exp()
}

pub fn dense_k(x: &Matrix<f64>, d: f64, g: f64) -> Vec<Vec<f64>> {
    let n = x.rows();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| kern(x.row(i), x.row(j), d) + if i == j { g } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn gj_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        for v in &mut m[c] {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// log-determinant by LU with partial pivoting.
pub fn lu_log_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        acc += piv.abs().ln();
        for r in c + 1..n {
            let f = m[r][c] / piv;
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    acc
}

pub fn mm(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

pub fn tr(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn col(v: &[f64]) -> Vec<Vec<f64>> {
    v.iter().map(|&x| vec![x]).collect()
}

pub fn frob_diff(a: &[Vec<f64>], b: &Matrix<f64>) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            s += (v - b[(i, j)]).powi(2);
        }
    }
    s.sqrt()
}

pub fn random_design<R: Rng>(t: usize, p: usize, rng: &mut R) -> Matrix<f64> {
    Matrix::from_fn(t, p, |_, _| rng.random())
}

pub fn sinusoid(x: f64) -> f64 {
    (std::f64::consts::PI * x / 5.0).sin() + 0.2 * (4.0 * std::f64::consts::PI * x / 5.0).cos()
}

/// `t` noisy sinusoid observations on an evenly spread random design, with
/// inputs scaled to [0, 1] and outputs standardized to mean 0 and range 1.
pub fn sinusoid_data(t: usize, seed: u64) -> (Matrix<f64>, Vec<f64>) {
    use rand_distr::{Distribution, Normal};
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let xs: Vec<f64> = (0..t)
        .map(|i| (i as f64 + r.random::<f64>()) / t as f64)
        .collect();
    let mut idx: Vec<usize> = (0..t).collect();
    rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut r);
    let xs: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| sinusoid(9.6 * x) + noise.sample(&mut r))
        .collect();
    let mean = ys.iter().sum::<f64>() / t as f64;
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| {
            (l.min(y), h.max(y))
        });
    let ys = ys.iter().map(|y| (y - mean) / (hi - lo)).collect();
    (Matrix::from_fn(t, 1, |i, _| xs[i]), ys)
}

/// Prior with the given shape and the crate's default Exp(5) kernel priors.
pub fn prior(a: f64, b: f64) -> PriorSpec<f64> {
    PriorSpec::new(a, b, 5.0, 5.0).unwrap()
}

pub fn basis(mean: MeanFn, x: &[f64]) -> Vec<f64> {
    match mean {
        MeanFn::Linear => std::iter::once(1.0).chain(x.iter().copied()).collect(),
        MeanFn::Zero => Vec::new(),
    }
}
