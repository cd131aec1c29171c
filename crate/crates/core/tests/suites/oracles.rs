//! Closed-form quantities checked against independent dense or Monte Carlo
//! computations.

#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

use super::common::*;
use gpsmc::{
    block_predict, build_corr, compute_suffstats, expected_improvement, extend_inverse,
    log_marginal, predict, predict_density, predict_log_density, CorrMatrix, KernelParams, Matrix,
    MeanFn, PredictiveT, RegressionSuffInfo,
};
use rand::Rng;
use rand_distr::{Distribution, StudentT};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

fn suff(
    x: &Matrix<f64>,
    y: &[f64],
    d: f64,
    g: f64,
    a: f64,
    b: f64,
    mean: MeanFn,
) -> RegressionSuffInfo<f64> {
    let k = build_corr(x, &KernelParams::new(d, g).unwrap()).unwrap();
    compute_suffstats(k, x, y, prior(a, b), mean).unwrap()
}

pub fn incremental_inverse_matches_dense_inverse() {
    let mut r = rng(11);
    for case in 0..30 {
        let t = r.random_range(2..=50);
        let p = r.random_range(1..=3);
        let d = r.random_range(0.05..1.0);
        let g = r.random_range(0.01..0.5);
        let x = random_design(t, p, &mut r);
        let params = KernelParams::new(d, g).unwrap();
        let mut k = build_corr(&x.select_rows(&[0]), &params).unwrap();
        for i in 1..t {
            let prev = x.select_rows(&(0..i).collect::<Vec<_>>());
            let k_new: Vec<f64> = (0..i).map(|j| kern(x.row(i), x.row(j), d)).collect();
            let via_extend = extend_inverse(&k, &k_new, 1.0 + g).unwrap();
            k = k.extend_with_point(&prev, x.row(i)).unwrap();
            assert!(
                frob_diff(
                    &gj_inverse(&dense_k(&x.select_rows(&(0..=i).collect::<Vec<_>>()), d, g)),
                    via_extend.inverse()
                ) < 1e-8
            );
        }
        let dense = dense_k(&x, d, g);
        let err = frob_diff(&gj_inverse(&dense), k.inverse());
        assert!(err < 1e-8, "case {case}: t={t} p={p} err={err}");
        assert!((k.log_det() - lu_log_det(&dense)).abs() < 1e-8);
    }
}

pub fn duplicated_rows_factor_with_a_nugget() {
    let x = Matrix::from_rows(&[vec![0.3, 0.3], vec![0.3, 0.3], vec![0.7, 0.1]]);
    let k = build_corr(&x, &KernelParams::new(0.2, 1e-8).unwrap()).unwrap();
    assert_eq!(k.n(), 3);
}

/// Dense conditional multivariate-t of `Y_I | Y_R` with `β` integrated out.
fn conditional_t_oracle(
    x: &Matrix<f64>,
    y: &[f64],
    block: &[usize],
    d: f64,
    g: f64,
    a: f64,
    b: f64,
    mean: MeanFn,
) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
    let rest: Vec<usize> = (0..x.rows()).filter(|i| !block.contains(i)).collect();
    let kij = |i: usize, j: usize| kern(x.row(i), x.row(j), d) + if i == j { g } else { 0.0 };
    let k_rr: Vec<Vec<f64>> = rest
        .iter()
        .map(|&i| rest.iter().map(|&j| kij(i, j)).collect())
        .collect();
    let k_ir: Vec<Vec<f64>> = block
        .iter()
        .map(|&i| rest.iter().map(|&j| kij(i, j)).collect())
        .collect();
    let k_ii: Vec<Vec<f64>> = block
        .iter()
        .map(|&i| block.iter().map(|&j| kij(i, j)).collect())
        .collect();
    let inv = gj_inverse(&k_rr);
    let y_r = col(&rest.iter().map(|&i| y[i]).collect::<Vec<_>>());
    let f_r: Vec<Vec<f64>> = rest.iter().map(|&i| basis(mean, x.row(i))).collect();
    let f_i: Vec<Vec<f64>> = block.iter().map(|&i| basis(mean, x.row(i))).collect();
    let q = mean.basis_len(x.cols());
    let w = mm(&k_ir, &inv);
    let (resid, fixed) = if q > 0 {
        let ftkf = mm(&mm(&tr(&f_r), &inv), &f_r);
        let v = gj_inverse(&ftkf);
        let beta = mm(&v, &mm(&mm(&tr(&f_r), &inv), &y_r));
        let fb = mm(&f_r, &beta);
        let resid: Vec<Vec<f64>> = y_r
            .iter()
            .zip(&fb)
            .map(|(a, b)| vec![a[0] - b[0]])
            .collect();
        let wf = mm(&w, &f_r);
        let h: Vec<Vec<f64>> = f_i
            .iter()
            .zip(&wf)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u - v).collect())
            .collect();
        (resid, Some((h, v, mm(&f_i, &beta))))
    } else {
        (y_r, None)
    };
    let wr = mm(&w, &resid);
    let psi = mm(&mm(&tr(&resid), &inv), &resid)[0][0];
    let mut mean_vec: Vec<f64> = wr.iter().map(|r| r[0]).collect();
    let schur: Vec<Vec<f64>> = {
        let wk = mm(&w, &tr(&k_ir));
        k_ii.iter()
            .zip(&wk)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u - v).collect())
            .collect()
    };
    let mut cov = schur;
    if let Some((h, v, mu_fixed)) = fixed {
        for (m, f) in mean_vec.iter_mut().zip(&mu_fixed) {
            *m += f[0];
        }
        let hvh = mm(&mm(&h, &v), &tr(&h));
        for (r, hr) in cov.iter_mut().zip(&hvh) {
            for (c, hc) in r.iter_mut().zip(hr) {
                *c += hc;
            }
        }
    }
    let dof = a + rest.len() as f64 - q as f64;
    let factor = (b + psi) / dof;
    let scale = cov
        .iter()
        .map(|r| r.iter().map(|c| c * factor).collect())
        .collect();
    (mean_vec, scale, dof)
}

pub fn block_predict_matches_dense_conditional() {
    let mut r = rng(12);
    for case in 0..40 {
        let (mean, a, b) = match case % 3 {
            0 => (MeanFn::Zero, 5.0, 10.0),
            1 => (MeanFn::Linear, 0.0, 0.0),
            _ => (MeanFn::Linear, 3.0, 2.0),
        };
        let p = r.random_range(1..=2);
        let t = r.random_range(8..=30);
        let x = random_design(t, p, &mut r);
        let y: Vec<f64> = (0..t).map(|_| r.random_range(-1.0..1.0)).collect();
        let (d, g) = (r.random_range(0.05..0.8), r.random_range(0.01..0.3));
        let s = suff(&x, &y, d, g, a, b, mean);
        let size = r.random_range(1..=4);
        let mut block: Vec<usize> = rand::seq::index::sample(&mut r, t, size).into_vec();
        block.sort_unstable();
        let got = block_predict(&s, &x, &y, &block).unwrap();
        let (m, sc, dof) = conditional_t_oracle(&x, &y, &block, d, g, a, b, mean);
        assert!((got.dof - dof).abs() < 1e-12);
        for i in 0..size {
            assert!((got.mean[i] - m[i]).abs() < 1e-8, "case {case} mean");
            for j in 0..size {
                assert!(
                    (got.scale[(i, j)] - sc[i][j]).abs() < 1e-8,
                    "case {case} scale"
                );
            }
        }
    }
}

pub fn log_marginal_satisfies_chain_rule() {
    let mut r = rng(13);
    for case in 0..50 {
        let (mean, a, b) = match case % 3 {
            0 => (MeanFn::Zero, 4.0, 3.0),
            1 => (MeanFn::Linear, 0.0, 0.0),
            _ => (MeanFn::Linear, 2.0, 1.0),
        };
        let p = r.random_range(1..=2);
        let q = mean.basis_len(p);
        let t = r.random_range(q + 3..=20);
        let x = random_design(t, p, &mut r);
        let y: Vec<f64> = (0..t).map(|_| r.random_range(-1.0..1.0)).collect();
        let (d, g) = (r.random_range(0.05..0.8), r.random_range(0.01..0.3));
        let params = KernelParams::new(d, g).unwrap();
        let start = if q == 0 { 0 } else { q + 1 };
        let head = |n: usize| x.select_rows(&(0..n).collect::<Vec<_>>());
        let at = |n: usize| {
            let k = if n == 0 {
                CorrMatrix::empty(params)
            } else {
                build_corr(&head(n), &params).unwrap()
            };
            compute_suffstats(k, &head(n), &y[..n], prior(a, b), mean).unwrap()
        };
        let mut sum = 0.0;
        for n in start..t {
            let s = at(n);
            sum += predict_log_density(&predict(&s, &head(n), x.row(n)).unwrap(), y[n]);
        }
        let lhs = log_marginal(&at(t)) - log_marginal(&at(start));
        assert!((lhs - sum).abs() < 1e-8, "case {case}: {lhs} vs {sum}");
    }
}

pub fn predictive_density_matches_reference_student_t() {
    let (x, y) = sinusoid_data(12, 3);
    let s = suff(&x, &y, 0.1, 0.05, 0.0, 0.0, MeanFn::Linear);
    let pt = predict(&s, &x, &[0.37]).unwrap();
    let reference = StudentsT::new(pt.mean, pt.scale.sqrt(), pt.dof).unwrap();
    for z in [-3.0, -0.5, 0.0, 0.2, 1.7] {
        let v = pt.mean + z * pt.scale.sqrt();
        assert!((predict_log_density(&pt, v) - reference.ln_pdf(v)).abs() < 1e-10);
    }
}

pub fn predictive_density_integrates_to_one() {
    let (x, y) = sinusoid_data(15, 4);
    for (d, g) in [(0.05, 0.01), (0.3, 0.1), (1.0, 0.5)] {
        let s = suff(&x, &y, d, g, 0.0, 0.0, MeanFn::Linear);
        for point in [[0.0], [0.41], [1.0], [2.5]] {
            let pt = predict(&s, &x, &point).unwrap();
            // Composite Simpson over ±400 scale units; the t tails beyond carry < 1e-9.
            let (lo, hi, n) = (
                pt.mean - 400.0 * pt.sd(),
                pt.mean + 400.0 * pt.sd(),
                400_000,
            );
            let h = (hi - lo) / n as f64;
            let mut acc = predict_density(&pt, lo) + predict_density(&pt, hi);
            for i in 1..n {
                acc += predict_density(&pt, lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let total = acc * h / 3.0;
            assert!((total - 1.0).abs() < 1e-6, "d={d} g={g}: {total}");
        }
    }
}

pub fn ei_closed_form_constant() {
    // t_5(0) = Γ(3) / (Γ(2.5) √(5π))
    let lg = statrs::function::gamma::ln_gamma;
    let t5 = (lg(3.0) - lg(2.5)).exp() / (5.0 * std::f64::consts::PI).sqrt();
    let expect = 5.0 * t5 / 4.0;
    let pt = PredictiveT {
        mean: 0.0,
        scale: 1.0,
        dof: 5.0,
    };
    let ei = expected_improvement(&pt, 0.0).unwrap();
    assert!((ei - expect).abs() < 1e-12);
    assert!((ei - 0.474_508_4).abs() < 1e-6, "{ei}");
}

pub fn ei_matches_monte_carlo() {
    let mut r = rng(14);
    let n = 1_000_000;
    for delta in [-1.0f64, 0.0, 1.0] {
        for sigma in [0.5, 1.0, 2.0] {
            for nu in [3.0, 5.0, 10.0] {
                let pt = PredictiveT {
                    mean: 0.0,
                    scale: sigma * sigma,
                    dof: nu,
                };
                let ei = expected_improvement(&pt, delta).unwrap();
                let t = StudentT::new(nu).unwrap();
                let (mut s1, mut s2) = (0.0, 0.0);
                for _ in 0..n {
                    let imp = (delta - sigma * t.sample(&mut r)).max(0.0);
                    s1 += imp;
                    s2 += imp * imp;
                }
                let mc = s1 / n as f64;
                let se = ((s2 / n as f64 - mc * mc) / n as f64).sqrt();
                assert!(
                    (ei - mc).abs() < 3.0 * se,
                    "δ={delta} σ={sigma} ν={nu}: {ei} vs {mc} ± {se}"
                );
            }
        }
    }
}

pub fn ei_cdf_term_matches_reference_student_t() {
    let pt = PredictiveT {
        mean: 0.3,
        scale: 0.25,
        dof: 7.0,
    };
    let f = -0.2;
    let z: f64 = (f - pt.mean) / 0.5;
    let t = StudentsT::new(0.0, 1.0, 7.0).unwrap();
    let expect =
        (f - pt.mean) * t.cdf(z) + (7.0 * 0.5 + (f - pt.mean).powi(2) / 0.5) * t.pdf(z) / 6.0;
    assert!((expected_improvement(&pt, f).unwrap() - expect).abs() < 1e-12);
}
