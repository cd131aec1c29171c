//! Noisy minimization of the two-dimensional exponential surface by
//! expected improvement.

use std::collections::BTreeMap;

use gpsmc::{
    choose_next_ei, lhd, map_candidate, CandidateSet, Dataset, ParticleSet, PriorSpec, Provenance,
    RegressionModel, RegressionParticles64,
};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::data::{exp2d_minimizer, gen_exp2d, InputScaling, OutputScaling, EXP2D_DOMAIN};
use crate::error::{ExperimentError, Result};
use crate::report::{Cell, Report, Table, Timings, VERSION};
use crate::{replication_seed, seeded_stream};

/// One acquisition round, in raw coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct EiRound {
    /// Data size before the acquisition.
    pub t: usize,
    pub x_star: Vec<f64>,
    pub chosen: Vec<f64>,
    /// Whether the chosen point is `x_star`.
    pub chose_x_star: bool,
    pub y: f64,
    pub log_ei: f64,
}

#[derive(Clone, Debug)]
pub struct EiRun {
    pub seed: u64,
    pub rounds: Vec<EiRound>,
    pub final_x: Vec<f64>,
    pub distance: f64,
    pub timings: BTreeMap<String, f64>,
}

impl EiRun {
    /// Rounds whose log-EI rose over the previous round although both rounds
    /// chose the MAP candidate.
    pub fn unexplained_spikes(&self) -> Vec<usize> {
        self.rounds
            .windows(2)
            .filter(|w| w[1].log_ei > w[0].log_ei && w[0].chose_x_star && w[1].chose_x_star)
            .map(|w| w[1].t)
            .collect()
    }

    /// Rounds whose log-EI rose over the previous round.
    pub fn spikes(&self) -> Vec<usize> {
        self.rounds
            .windows(2)
            .filter(|w| w[1].log_ei > w[0].log_ei)
            .map(|w| w[1].t)
            .collect()
    }
}

fn scaling() -> InputScaling {
    InputScaling::uniform(2, EXP2D_DOMAIN)
}

/// Final minimizer: the MAP particle's mean minimizer seeded from a fresh
/// LHD plus the training inputs.
pub fn final_minimizer(ps: &RegressionParticles64, size: usize, seed: u64) -> Result<Vec<f64>> {
    let fresh = lhd::<f64, _>(size, 2, &mut seeded_stream(seed, 3))?;
    let mut seeds = fresh.points().clone();
    for row in ps.data().x().row_iter() {
        seeds.push_row(row)?;
    }
    let seeds = CandidateSet::new(seeds, Provenance::Augmented)?;
    Ok(map_candidate(ps, &seeds)?)
}

pub fn run_seed(cfg: &RunConfig, seed: u64) -> Result<EiRun> {
    let scale = scaling();
    let noise =
        Normal::new(0.0, cfg.noise_sd).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut timer = Timings::default();
    let mut noise_rng = seeded_stream(seed, 1);
    let observe = |u: &[f64], rng: &mut _| gen_exp2d(&scale.from_unit(u)) + noise.sample(rng);

    let start = lhd::<f64, _>(cfg.t0, 2, &mut seeded_stream(seed, 0))?;
    let y0: Vec<f64> = start
        .points()
        .row_iter()
        .map(|u| observe(u, &mut noise_rng))
        .collect();
    let outputs = OutputScaling::from_data(&y0);
    let data = Dataset::from_parts(
        start.points().clone(),
        y0.iter().map(|&v| outputs.scale(v)).collect(),
    )?;
    let mut ps = timer.time("init", || {
        ParticleSet::initialize(
            RegressionModel::default(),
            cfg.engine(PriorSpec::improper(), seed),
            data,
        )
    })?;

    let mut cand_rng = seeded_stream(seed, 2);
    let mut rounds = Vec::with_capacity(cfg.rounds - cfg.t0);
    for t in cfg.t0..cfg.rounds {
        let cands = lhd::<f64, _>(cfg.candidates, 2, &mut cand_rng)?;
        let rec = timer.time("acquire", || choose_next_ei(&ps, &cands, cfg.fmin))?;
        let y = observe(&rec.chosen, &mut noise_rng);
        timer.time("update", || ps.update(&rec.chosen, outputs.scale(y)))?;
        rounds.push(EiRound {
            t,
            x_star: scale.from_unit(rec.x_star.as_deref().unwrap_or(&rec.chosen)),
            chosen: scale.from_unit(&rec.chosen),
            chose_x_star: rec.index == cands.len(),
            y,
            log_ei: rec.score.ln(),
        });
    }
    let final_x =
        scale.from_unit(&timer.time("final", || final_minimizer(&ps, cfg.candidates, seed))?);
    let target = exp2d_minimizer();
    let distance = final_x
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(EiRun {
        seed,
        rounds,
        final_x,
        distance,
        timings: timer.into_map(),
    })
}

pub fn run_ei_optimization(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let runs = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_seed(cfg, replication_seed(cfg.seed, r)))
        .collect::<Result<Vec<_>>>()?;

    let mut rounds = Table::new(
        "rounds",
        &[
            "rep",
            "t",
            "xstar1",
            "xstar2",
            "x1",
            "x2",
            "chose_xstar",
            "y",
            "max_log_ei",
        ],
    );
    let mut finals = Table::new("final", &["rep", "seed", "x1", "x2", "distance"]);
    let mut timings = BTreeMap::new();
    for (r, run) in runs.iter().enumerate() {
        for k in &run.rounds {
            rounds.push(vec![
                r.into(),
                k.t.into(),
                k.x_star[0].into(),
                k.x_star[1].into(),
                k.chosen[0].into(),
                k.chosen[1].into(),
                k.chose_x_star.into(),
                k.y.into(),
                k.log_ei.into(),
            ]);
        }
        finals.push(vec![
            r.into(),
            Cell::Text(run.seed.to_string()),
            run.final_x[0].into(),
            run.final_x[1].into(),
            run.distance.into(),
        ]);
        for (k, v) in &run.timings {
            *timings.entry(k.clone()).or_insert(0.0) += v;
        }
    }
    let spikes: Vec<usize> = runs.iter().map(|r| r.spikes().len()).collect();
    let unexplained: Vec<Vec<usize>> = runs.iter().map(EiRun::unexplained_spikes).collect();
    for (run, u) in runs.iter().zip(&unexplained) {
        if !u.is_empty() {
            log::info!(
                "seed {}: log-EI rose between consecutive MAP-candidate rounds at t = {u:?}",
                run.seed
            );
        }
    }
    Ok(Report {
        experiment: cfg.experiment.name().into(),
        version: VERSION.into(),
        config: serde_json::to_value(cfg)?,
        summary: json!({
            "target": exp2d_minimizer(),
            "final_x": runs.iter().map(|r| r.final_x.clone()).collect::<Vec<_>>(),
            "distance": runs.iter().map(|r| r.distance).collect::<Vec<_>>(),
            "within_0_1": runs.iter().filter(|r| r.distance <= 0.1).count(),
            "log_ei_spikes": spikes,
            "unexplained_spikes": unexplained,
        }),
        timings,
        tables: vec![rounds, finals],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(t: usize, log_ei: f64, chose_x_star: bool) -> EiRound {
        EiRound {
            t,
            x_star: vec![0.0, 0.0],
            chosen: vec![0.0, 0.0],
            chose_x_star,
            y: 0.0,
            log_ei,
        }
    }

    #[test]
    fn spike_bookkeeping() {
        let run = EiRun {
            seed: 0,
            rounds: vec![
                round(7, -3.0, true),
                round(8, -2.0, true),
                round(9, -4.0, false),
                round(10, -1.0, true),
            ],
            final_x: vec![0.0, 0.0],
            distance: 0.0,
            timings: BTreeMap::new(),
        };
        assert_eq!(run.spikes(), [8, 10]);
        assert_eq!(run.unexplained_spikes(), [8]);
    }
}
