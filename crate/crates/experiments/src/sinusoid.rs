//! One-dimensional regression study: particle learning against batch MCMC.

use gpsmc::design::posterior_mean;
use gpsmc::{
    lhd, predict_mean, run_mcmc, Dataset, Matrix, MeanFn, ParticleSet, PriorSpec, RegressionModel,
    RegressionParticles64,
};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde_json::json;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::RunConfig;
use crate::data::{gen_sinusoid, InputScaling, ScaledData, SINUSOID_DOMAIN};
use crate::error::Result;
use crate::report::{mean, sd, Cell, Report, Table, Timings, VERSION};
use crate::{replication_seed, seeded_stream};

/// One replication's training data and held-out truth.
#[derive(Clone, Debug)]
pub struct SinusoidData {
    pub train: ScaledData,
    /// Noise-free responses at the training inputs.
    pub train_truth: Vec<f64>,
    pub test_x: Matrix<f64>,
    pub test_truth: Vec<f64>,
}

/// Draws an LHD of `cfg.rounds` noisy observations and an LHD test grid.
pub fn sinusoid_data(cfg: &RunConfig, seed: u64) -> Result<SinusoidData> {
    let scaling = InputScaling::uniform(1, SINUSOID_DOMAIN);
    let noise = Normal::new(0.0, cfg.noise_sd)
        .map_err(|e| crate::ExperimentError::Config(e.to_string()))?;
    let mut rng = seeded_stream(seed, 1);
    let design = lhd::<f64, _>(cfg.rounds, 1, &mut rng)?;
    let x_raw = scaling.matrix_from_unit(design.points());
    let train_truth: Vec<f64> = x_raw.row_iter().map(|r| gen_sinusoid(r[0])).collect();
    let y_raw: Vec<f64> = train_truth
        .iter()
        .map(|f| f + noise.sample(&mut rng))
        .collect();
    let train = ScaledData::new(x_raw, y_raw, Some(scaling.clone()))?;

    let mut rng = seeded_stream(seed, 2);
    let test = lhd::<f64, _>(cfg.test_size, 1, &mut rng)?;
    let test_x = test.points().clone();
    let test_truth = scaling
        .matrix_from_unit(&test_x)
        .row_iter()
        .map(|r| gen_sinusoid(r[0]))
        .collect();
    Ok(SinusoidData {
        train,
        train_truth,
        test_x,
        test_truth,
    })
}

/// Particle set after assimilating all of `data` sequentially from `cfg.t0`.
pub fn sinusoid_particles(
    cfg: &RunConfig,
    data: &SinusoidData,
    seed: u64,
) -> Result<RegressionParticles64> {
    let dataset = Dataset::from_parts(data.train.x.clone(), data.train.y.clone())?;
    Ok(ParticleSet::initialize(
        RegressionModel::default(),
        cfg.engine(PriorSpec::improper(), seed),
        dataset,
    )?)
}

fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    (pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / truth.len() as f64)
        .sqrt()
}

/// Per-replication outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct SinusoidRep {
    pub seed: u64,
    pub pl_rmse: f64,
    pub mcmc_rmse: f64,
    pub final_unique: usize,
    pub timings: std::collections::BTreeMap<String, f64>,
}

pub fn run_replication(cfg: &RunConfig, seed: u64) -> Result<(SinusoidRep, SinusoidData)> {
    let mut timer = Timings::default();
    let data = timer.time("data", || sinusoid_data(cfg, seed))?;
    let out = data.train.outputs;
    let ps = timer.time("pl", || sinusoid_particles(cfg, &data, seed))?;
    let pl_pred: Vec<f64> = timer.time("pl_predict", || {
        data.test_x
            .row_iter()
            .map(|x| out.unscale(posterior_mean(&ps, x)))
            .collect()
    });

    let engine = cfg.engine(PriorSpec::improper(), seed);
    let mut rng = seeded_stream(seed, 3);
    let samples = timer.time("mcmc", || {
        run_mcmc(
            &data.train.x,
            &data.train.y,
            cfg.mcmc_iters,
            cfg.mcmc_thin,
            &engine,
            MeanFn::Linear,
            &mut rng,
        )
    })?;
    let mcmc_pred: Vec<f64> = timer.time("mcmc_predict", || {
        data.test_x
            .row_iter()
            .map(|x| {
                let m = samples
                    .iter()
                    .map(|s| predict_mean(s, &data.train.x, x))
                    .sum::<f64>()
                    / samples.len() as f64;
                out.unscale(m)
            })
            .collect()
    });
    Ok((
        SinusoidRep {
            seed,
            pl_rmse: rmse(&pl_pred, &data.test_truth),
            mcmc_rmse: rmse(&mcmc_pred, &data.test_truth),
            final_unique: ps.unique_param_count(),
            timings: timer.into_map(),
        },
        data,
    ))
}

/// Paired summary of PL and MCMC errors.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PairedSummary {
    pub pl_mean: f64,
    pub pl_sd: f64,
    pub mcmc_mean: f64,
    pub mcmc_sd: f64,
    pub ratio: f64,
    pub win_rate: f64,
    /// Paired t statistic of `mcmc - pl`; positive favours PL.
    pub t_statistic: f64,
    /// One-sided p-value for PL having the smaller mean error.
    pub p_value: f64,
}

pub fn paired_summary(pl: &[f64], mcmc: &[f64]) -> PairedSummary {
    let diff: Vec<f64> = mcmc.iter().zip(pl).map(|(m, p)| m - p).collect();
    let n = diff.len() as f64;
    let se = sd(&diff) / n.sqrt();
    let t_statistic = if se > 0.0 { mean(&diff) / se } else { 0.0 };
    let p_value = if diff.len() > 1 && se > 0.0 {
        StudentsT::new(0.0, 1.0, n - 1.0).map_or(f64::NAN, |t| 1.0 - t.cdf(t_statistic))
    } else {
        f64::NAN
    };
    PairedSummary {
        pl_mean: mean(pl),
        pl_sd: sd(pl),
        mcmc_mean: mean(mcmc),
        mcmc_sd: sd(mcmc),
        ratio: mean(pl) / mean(mcmc),
        win_rate: diff.iter().filter(|&&d| d > 0.0).count() as f64 / n,
        t_statistic,
        p_value,
    }
}

pub fn run_sinusoid_regression(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let reps = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, replication_seed(cfg.seed, r)))
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        "replications",
        &[
            "rep",
            "seed",
            "pl_rmse",
            "mcmc_rmse",
            "pl_wins",
            "unique_params",
        ],
    );
    let mut design = Table::new("design", &["rep", "x", "y_true", "y_obs", "y_scaled"]);
    let mut timings = std::collections::BTreeMap::new();
    for (r, (rep, data)) in reps.iter().enumerate() {
        table.push(vec![
            r.into(),
            Cell::Text(rep.seed.to_string()),
            rep.pl_rmse.into(),
            rep.mcmc_rmse.into(),
            (rep.pl_rmse < rep.mcmc_rmse).into(),
            rep.final_unique.into(),
        ]);
        for i in 0..data.train.y.len() {
            design.push(vec![
                r.into(),
                data.train.x_raw.row(i)[0].into(),
                data.train_truth[i].into(),
                data.train.y_raw[i].into(),
                data.train.y[i].into(),
            ]);
        }
        for (k, v) in &rep.timings {
            *timings.entry(k.clone()).or_insert(0.0) += v;
        }
    }
    let pl: Vec<f64> = reps.iter().map(|r| r.0.pl_rmse).collect();
    let mcmc: Vec<f64> = reps.iter().map(|r| r.0.mcmc_rmse).collect();
    Ok(Report {
        experiment: cfg.experiment.name().into(),
        version: VERSION.into(),
        config: serde_json::to_value(cfg)?,
        summary: json!(paired_summary(&pl, &mcmc)),
        timings,
        tables: vec![table, design],
    })
}
