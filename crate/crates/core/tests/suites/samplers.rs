//! Sampler correctness against grid quadrature and analytic targets.

#![allow(clippy::needless_range_loop)]

use super::common::*;
use gpsmc::classify::gibbs_sweep;
use gpsmc::engine::suffinfo_for;
use gpsmc::{
    mh_step, run_mcmc, ClassSuffInfo, ClassificationModel, Dataset, EngineConfig, KernelParams,
    Matrix, MeanFn, ParticleSet, RegressionModel, RegressionSuffInfo, Window,
};
use statrs::distribution::{ChiSquared, ContinuousCDF, Exp};

fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at the 1% level.
fn ks_critical(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

fn assert_exp5(label: &str, values: Vec<f64>) {
    let n = values.len();
    let exp = Exp::new(5.0).unwrap();
    let ks = ks_statistic(values, |v| exp.cdf(v));
    assert!(
        ks < ks_critical(n),
        "{label}: KS {ks} >= {}",
        ks_critical(n)
    );
}

/// Posterior mass of `(d, g)` on a log-spaced grid, normalized.
struct Grid {
    log_d: Vec<f64>,
    log_g: Vec<f64>,
    mass: Vec<Vec<f64>>,
}

fn grid_posterior(x: &Matrix<f64>, y: &[f64], n: usize) -> Grid {
    let span = |lo: f64, hi: f64| -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
            .collect()
    };
    let log_d = span(1e-5f64.ln(), 5f64.ln());
    let log_g = span(1e-7f64.ln(), 5f64.ln());
    let mut lp = vec![vec![0.0; n]; n];
    let mut max = f64::NEG_INFINITY;
    for (i, ld) in log_d.iter().enumerate() {
        for (j, lg) in log_g.iter().enumerate() {
            let params = KernelParams::new(ld.exp(), lg.exp()).unwrap();
            let s = suffinfo_for(&params, x, y, prior(0.0, 0.0), MeanFn::Linear).unwrap();
            // Jacobian of the log-scale grid.
            lp[i][j] = s.log_posterior() + ld + lg;
            max = max.max(lp[i][j]);
        }
    }
    let mut mass: Vec<Vec<f64>> = lp
        .iter()
        .map(|r| r.iter().map(|v| (v - max).exp()).collect())
        .collect();
    let total: f64 = mass.iter().flatten().sum();
    for v in mass.iter_mut().flatten() {
        *v /= total;
    }
    Grid { log_d, log_g, mass }
}

/// Interior edges splitting a marginal into `k` bins of equal grid mass.
fn quantile_edges(points: &[f64], marginal: &[f64], k: usize) -> Vec<f64> {
    let mut edges = Vec::new();
    let mut acc = 0.0;
    for (i, m) in marginal.iter().enumerate() {
        acc += m;
        if edges.len() < k - 1 && acc >= (edges.len() + 1) as f64 / k as f64 {
            edges.push(0.5 * (points[i] + points.get(i + 1).copied().unwrap_or(points[i])));
        }
    }
    edges
}

fn bin(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e <= v)
}

/// Chi-square test of `(d, g)` draws against the grid posterior on a 10×10
/// binning; cells with expected count below 5 are pooled.
fn chi_square_against_grid(grid: &Grid, draws: &[(f64, f64)]) -> (f64, f64) {
    let k = 10;
    let md: Vec<f64> = grid.mass.iter().map(|r| r.iter().sum()).collect();
    let mg: Vec<f64> = (0..grid.log_g.len())
        .map(|j| grid.mass.iter().map(|r| r[j]).sum())
        .collect();
    let ed = quantile_edges(&grid.log_d, &md, k);
    let eg = quantile_edges(&grid.log_g, &mg, k);
    let mut expected = vec![0.0; k * k];
    for (i, ld) in grid.log_d.iter().enumerate() {
        for (j, lg) in grid.log_g.iter().enumerate() {
            expected[bin(&ed, *ld) * k + bin(&eg, *lg)] += grid.mass[i][j];
        }
    }
    let mut observed = vec![0.0; k * k];
    for &(d, g) in draws {
        observed[bin(&ed, d.ln()) * k + bin(&eg, g.ln())] += 1.0;
    }
    let n = draws.len() as f64;
    let (mut stat, mut cells, mut pooled_e, mut pooled_o) = (0.0, 0usize, 0.0, 0.0);
    for (e, o) in expected.iter().zip(&observed) {
        let e = e * n;
        if e < 5.0 {
            pooled_e += e;
            pooled_o += o;
        } else {
            stat += (o - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_e > 0.0 {
        stat += (pooled_o - pooled_e).powi(2) / pooled_e.max(1e-12);
        cells += 1;
    }
    let critical = ChiSquared::new((cells - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    (stat, critical)
}

pub fn mh_chain_matches_grid_posterior() {
    let (x, y) = sinusoid_data(10, 21);
    let grid = grid_posterior(&x, &y, 300);
    let mut r = rng(22);
    let start = KernelParams::new(0.2, 0.2).unwrap();
    let mut s = suffinfo_for(&start, &x, &y, prior(0.0, 0.0), MeanFn::Linear).unwrap();
    let mut draws = Vec::new();
    for it in 0..(2_000 + 3_000 * 200) {
        s = mh_step(&s, &x, &y, Window::baseline(), &mut r).unwrap().0;
        if it >= 2_000 && (it - 2_000) % 200 == 0 {
            draws.push((s.params().d(), s.params().g()));
        }
    }
    let (stat, critical) = chi_square_against_grid(&grid, &draws);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

pub fn independence_initialization_matches_grid_posterior() {
    let (x, y) = sinusoid_data(10, 21);
    let grid = grid_posterior(&x, &y, 300);
    let mut cfg = EngineConfig::desk(prior(0.0, 0.0), 10, 23);
    cfg.n_particles = 3_000;
    cfg.init_thin = 50;
    let data = Dataset::from_parts(x, y).unwrap();
    let ps = ParticleSet::initialize(RegressionModel::default(), cfg, data).unwrap();
    let draws: Vec<(f64, f64)> = ps
        .particles()
        .iter()
        .map(|p| (p.params().d(), p.params().g()))
        .collect();
    let (stat, critical) = chi_square_against_grid(&grid, &draws);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

fn empty_prior_only(params: KernelParams<f64>) -> RegressionSuffInfo<f64> {
    suffinfo_for(
        &params,
        &Matrix::with_cols(1),
        &[],
        prior(5.0, 10.0),
        MeanFn::Zero,
    )
    .unwrap()
}

pub fn mcmc_recovers_exponential_prior() {
    let cfg = EngineConfig::desk(prior(5.0, 10.0), 0, 1);
    let mut r = rng(31);
    let draws = run_mcmc(
        &Matrix::with_cols(1),
        &[],
        200_000,
        100,
        &cfg,
        MeanFn::Zero,
        &mut r,
    )
    .unwrap();
    assert_eq!(draws.len(), 2_000);
    assert_exp5("d", draws.iter().map(|s| s.params().d()).collect());
    assert_exp5("g", draws.iter().map(|s| s.params().g()).collect());
}

pub fn prior_draw_initialization_recovers_exponential_prior() {
    let mut cfg = EngineConfig::desk(prior(5.0, 10.0), 0, 32);
    cfg.n_particles = 1_000;
    let ps =
        ParticleSet::initialize(ClassificationModel::new(3), cfg.clone(), Dataset::new(2)).unwrap();
    let first: Vec<f64> = ps.particles().iter().map(|p| p.params()[0].d()).collect();
    let second: Vec<f64> = ps.particles().iter().map(|p| p.params()[1].g()).collect();
    assert_exp5("class d", first);
    assert_exp5("class g", second);

    let model = RegressionModel { mean: MeanFn::Zero };
    let ps = ParticleSet::initialize(model, cfg, Dataset::new(1)).unwrap();
    assert_exp5(
        "regression d",
        ps.particles().iter().map(|p| p.params().d()).collect(),
    );
}

pub fn prior_only_acceptance_matches_analytic_rate() {
    let current = KernelParams::new(0.3, 0.1).unwrap();
    let s = empty_prior_only(current);
    let w = Window::<f64>::baseline();
    // Acceptance min(1, π(d*)π(g*) d g / (π(d)π(g) d* g*)) averaged over the
    // uniform proposal window by midpoint quadrature.
    let (d, g) = (current.d(), current.g());
    let (dl, dh) = (w.l * d / w.u, w.u * d / w.l);
    let (gl, gh) = (w.l * g / w.u, w.u * g / w.l);
    let m = 2_000;
    let mut acc = 0.0;
    for i in 0..m {
        let ds = dl + (dh - dl) * (i as f64 + 0.5) / m as f64;
        for j in 0..m {
            let gs = gl + (gh - gl) * (j as f64 + 0.5) / m as f64;
            let log_r = -5.0 * (ds - d) - 5.0 * (gs - g) + (d / ds).ln() + (g / gs).ln();
            acc += log_r.exp().min(1.0);
        }
    }
    let analytic = acc / (m * m) as f64;
    let mut r = rng(33);
    let n = 200_000;
    let accepted = (0..n)
        .filter(|_| {
            mh_step(&s, &Matrix::with_cols(1), &[], w, &mut r)
                .unwrap()
                .1
        })
        .count();
    let rate = accepted as f64 / n as f64;
    let se = (analytic * (1.0 - analytic) / n as f64).sqrt();
    assert!((rate - analytic).abs() < 4.0 * se, "{rate} vs {analytic}");
}

pub fn rejuvenated_parameters_stay_in_window() {
    let (x, y) = sinusoid_data(10, 5);
    let mut r = rng(34);
    let w = Window::<f64>::baseline();
    let mut s = suffinfo_for(
        &KernelParams::new(0.2, 0.1).unwrap(),
        &x,
        &y,
        prior(0.0, 0.0),
        MeanFn::Linear,
    )
    .unwrap();
    for _ in 0..2_000 {
        let (next, _) = mh_step(&s, &x, &y, w, &mut r).unwrap();
        assert!(w.contains(s.params().d(), next.params().d()));
        assert!(w.contains(s.params().g(), next.params().g()));
        s = next;
    }
}

fn log1pexp_neg(v: f64) -> f64 {
    // ln(e^{-v} + 1)
    if v < 0.0 {
        -v + v.exp().ln_1p()
    } else {
        (-v).exp().ln_1p()
    }
}

/// Unnormalized log posterior of the latents under the multivariate-t prior
/// (dof a, scale (b/a) K) and the softmax likelihood with the last class at 0.
fn latent_log_post(y: &[f64], kinv: &[Vec<f64>], a: f64, b: f64, labels: &[usize]) -> f64 {
    let n = y.len();
    let quad: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| y[i] * kinv[i][j] * y[j])
        .sum();
    let prior = -0.5 * (a + n as f64) * (1.0 + quad / b).ln();
    let lik: f64 = y
        .iter()
        .zip(labels)
        .map(|(&v, &c)| if c == 0 { -v } else { 0.0 } - log1pexp_neg(v))
        .sum();
    prior + lik
}

fn class_fixture(x: &Matrix<f64>, d: f64, g: f64) -> (ClassSuffInfo<f64>, Vec<Vec<f64>>) {
    let params = KernelParams::new(d, g).unwrap();
    let s =
        ClassSuffInfo::new(2, &[params], x, vec![vec![0.0; x.rows()]], prior(5.0, 10.0)).unwrap();
    (s, gj_inverse(&dense_k(x, d, g)))
}

pub fn gibbs_marginal_matches_grid_quadrature() {
    let x = Matrix::from_rows(&[vec![0.1], vec![0.4], vec![0.8]]);
    let labels = [0, 1, 0];
    let (a, b) = (5.0, 10.0);
    let (s0, kinv) = class_fixture(&x, 0.3, 0.1);

    // CDF of y_0 at a few points by 3-d midpoint quadrature.
    let cuts = [-1.5, -0.5, 0.0, 0.5, 1.5];
    // Cell edges fall on every cut.
    let (lim, n) = (30.0, 240);
    let h = 2.0 * lim / n as f64;
    let node = |i: usize| -lim + h * (i as f64 + 0.5);
    let mut total = 0.0;
    let mut below = [0.0; 5];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let y = [node(i), node(j), node(k)];
                let w = latent_log_post(&y, &kinv, a, b, &labels).exp();
                total += w;
                for (c, cut) in cuts.iter().enumerate() {
                    if y[0] <= *cut {
                        below[c] += w;
                    }
                }
            }
        }
    }
    let oracle: Vec<f64> = below.iter().map(|v| v / total).collect();

    for fold in [10, 1] {
        let mut r = rng(40 + fold as u64);
        let mut s = s0.clone();
        let (burn, keep, thin) = (1_000, 40_000, 5);
        let mut draws = Vec::with_capacity(keep);
        for it in 0..burn + keep * thin {
            s = gibbs_sweep(&s, &x, &labels, fold, &mut r).unwrap().0;
            if it >= burn && (it - burn) % thin == 0 {
                draws.push(s.latents()[0][0]);
            }
        }
        for (c, cut) in cuts.iter().enumerate() {
            let ind: Vec<f64> = draws
                .iter()
                .map(|&v| if v <= *cut { 1.0 } else { 0.0 })
                .collect();
            let est = ind.iter().sum::<f64>() / ind.len() as f64;
            // Batch-means standard error.
            let batches = 50;
            let size = ind.len() / batches;
            let means: Vec<f64> = ind
                .chunks(size)
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect();
            let var = means.iter().map(|m| (m - est).powi(2)).sum::<f64>() / (batches - 1) as f64;
            let se = (var / batches as f64).sqrt().max(1e-3);
            assert!(
                (est - oracle[c]).abs() < 4.0 * se,
                "fold {fold}, cut {cut}: {est} vs {} (se {se})",
                oracle[c]
            );
        }
    }
}

pub fn gibbs_blocks_satisfy_detailed_balance() {
    let x = Matrix::from_rows(&[vec![0.2], vec![0.6]]);
    let labels = [0, 1];
    let (mut s, _) = class_fixture(&x, 0.4, 0.2);
    let mut r = rng(50);
    let edges = [-0.8, 0.8];
    let state = |s: &ClassSuffInfo<f64>| {
        let l = &s.latents()[0];
        bin(&edges, l[0]) * 3 + bin(&edges, l[1])
    };
    for _ in 0..1_000 {
        s = gibbs_sweep(&s, &x, &labels, 1, &mut r).unwrap().0;
    }
    let mut counts = [[0.0f64; 9]; 9];
    let mut cur = state(&s);
    for _ in 0..400_000 {
        s = gibbs_sweep(&s, &x, &labels, 1, &mut r).unwrap().0;
        let next = state(&s);
        counts[cur][next] += 1.0;
        cur = next;
    }
    for i in 0..9 {
        for j in i + 1..9 {
            let (a, b) = (counts[i][j], counts[j][i]);
            assert!(
                (a - b).abs() <= 4.0 * (a + b).sqrt() + 5.0,
                "{i}->{j}: {a} vs {j}->{i}: {b}"
            );
        }
    }
}
