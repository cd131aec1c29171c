//! Two-dimensional three-class study: a static MED against entropy-driven
//! active learning.

use std::collections::BTreeMap;

use gpsmc::design::posterior_class_probs;
use gpsmc::{
    choose_next_entropy, entropy, lhd, med, CandidateSet, ClassParticles64, ClassProbs,
    ClassificationModel, Dataset, Matrix, ParticleSet, PriorSpec, Provenance, Smoothing,
};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Experiment, RunConfig};
use crate::data::{gen_class_labels, InputScaling, EXP2D_DOMAIN};
use crate::error::Result;
use crate::report::{mean, Cell, Report, Table, Timings, VERSION};
use crate::{replication_seed, seeded_stream};

pub const N_CLASSES: usize = 3;

/// Length scale of the MED criterion for an `n`-point design.
pub fn med_range(n: usize) -> f64 {
    (2.0 / n as f64).min(0.5)
}

/// `n`-point MED chosen from a fresh LHD four times as large.
pub fn med_design<R: Rng>(n: usize, rng: &mut R) -> Result<CandidateSet<f64>> {
    let pool = lhd::<f64, _>(4 * n, 2, rng)?;
    Ok(med(n, &pool, med_range(n))?)
}

fn scaling() -> InputScaling {
    InputScaling::uniform(2, EXP2D_DOMAIN)
}

/// 0-based class of a point in `[0, 1]²`.
pub fn label_unit(u: &[f64]) -> usize {
    gen_class_labels(&scaling().from_unit(u)) - 1
}

/// Designs shared by both arms of one seed.
#[derive(Clone, Debug)]
pub struct ClassProblem {
    /// `T`-point MED for the static arm.
    pub design: CandidateSet<f64>,
    /// Candidate MED; its first `t0` rows seed active learning.
    pub pool: CandidateSet<f64>,
    pub test: CandidateSet<f64>,
}

pub fn class_problem(cfg: &RunConfig, seed: u64) -> Result<ClassProblem> {
    Ok(ClassProblem {
        design: med_design(cfg.rounds, &mut seeded_stream(seed, 1))?,
        pool: med_design(cfg.candidates, &mut seeded_stream(seed, 2))?,
        test: med_design(cfg.test_size, &mut seeded_stream(seed, 3))?,
    })
}

fn dataset(points: &Matrix<f64>) -> Result<Dataset<f64, usize>> {
    let labels = points.row_iter().map(label_unit).collect();
    Ok(Dataset::from_parts(points.clone(), labels)?)
}

fn model(cfg: &RunConfig) -> ClassificationModel {
    ClassificationModel {
        n_classes: N_CLASSES,
        fold_size: cfg.fold_size,
        latent_draws: cfg.latent_draws,
    }
}

/// Particles fitted sequentially to all of `points`.
pub fn fit_static(cfg: &RunConfig, points: &Matrix<f64>, seed: u64) -> Result<ClassParticles64> {
    Ok(ParticleSet::initialize(
        model(cfg),
        cfg.engine(PriorSpec::proper_default(), seed),
        dataset(points)?,
    )?)
}

/// One active-learning acquisition.
#[derive(Clone, Debug, PartialEq)]
pub struct Acquisition {
    pub t: usize,
    pub point: Vec<f64>,
    pub label: usize,
    pub score: f64,
}

/// Starts from the first `t0` pool points (a sub-MED) and adds `T - t0` of
/// the remaining pool points by maximum BVSB entropy.
pub fn fit_active(
    cfg: &RunConfig,
    problem: &ClassProblem,
    seed: u64,
) -> Result<(ClassParticles64, Vec<Acquisition>)> {
    let head: Vec<usize> = (0..cfg.t0).collect();
    let rest: Vec<usize> = (cfg.t0..problem.pool.len()).collect();
    let start = problem.pool.points().select_rows(&head);
    let mut ps = fit_static(cfg, &start, seed)?;
    let mut pool = CandidateSet::new(
        problem.pool.points().select_rows(&rest),
        Provenance::FixedPool,
    )?;
    let mut rng = seeded_stream(seed, 4);
    let smoothing = if cfg.smoothing {
        Smoothing::Kernel(None)
    } else {
        Smoothing::Off
    };
    let mut picks = Vec::with_capacity(cfg.rounds - cfg.t0);
    for t in cfg.t0..cfg.rounds {
        let rec = choose_next_entropy(&ps, &mut pool, smoothing, &mut rng)?;
        let label = label_unit(&rec.chosen);
        ps.update(&rec.chosen, label)?;
        picks.push(Acquisition {
            t: t + 1,
            point: rec.chosen,
            label,
            score: rec.score,
        });
    }
    Ok((ps, picks))
}

/// Particle-averaged class probabilities at every test point.
pub fn predict_test(
    ps: &ClassParticles64,
    test: &CandidateSet<f64>,
    seed: u64,
) -> Result<Vec<ClassProbs<f64>>> {
    (0..test.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_stream(seed, 1000 + i as u64);
            Ok(posterior_class_probs(ps, test.point(i), &mut rng)?)
        })
        .collect()
}

/// Number of test points whose most probable class is wrong.
pub fn misclassified(test: &CandidateSet<f64>, probs: &[ClassProbs<f64>]) -> usize {
    probs
        .iter()
        .enumerate()
        .filter(|(i, p)| p.argmax() != label_unit(test.point(*i)))
        .count()
}

/// Outcome of one arm on one seed.
#[derive(Clone, Debug)]
pub struct ClassArm {
    pub seed: u64,
    pub misclassified: usize,
    pub probs: Vec<ClassProbs<f64>>,
    pub acquisitions: Vec<Acquisition>,
    pub timings: BTreeMap<String, f64>,
}

pub fn run_arm(
    cfg: &RunConfig,
    problem: &ClassProblem,
    active: bool,
    seed: u64,
) -> Result<ClassArm> {
    let mut timer = Timings::default();
    let (ps, acquisitions) = if active {
        timer.time("fit", || fit_active(cfg, problem, seed))?
    } else {
        (
            timer.time("fit", || fit_static(cfg, problem.design.points(), seed))?,
            Vec::new(),
        )
    };
    let probs = timer.time("predict", || predict_test(&ps, &problem.test, seed))?;
    Ok(ClassArm {
        seed,
        misclassified: misclassified(&problem.test, &probs),
        probs,
        acquisitions,
        timings: timer.into_map(),
    })
}

fn run(cfg: &RunConfig, active: bool) -> Result<Report> {
    cfg.validate()?;
    let mut timings = BTreeMap::new();
    let arms = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(cfg.seed, r);
            let mut timer = Timings::default();
            let problem = timer.time("design", || class_problem(cfg, seed))?;
            let arm = run_arm(cfg, &problem, active, seed)?;
            Ok((problem, arm, timer.into_map()))
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = scaling();
    let mut reps = Table::new(
        "replications",
        &["rep", "seed", "misclassified", "test_size"],
    );
    let mut preds = Table::new(
        "predictions",
        &[
            "rep",
            "x1",
            "x2",
            "class",
            "predicted",
            "p1",
            "p2",
            "p3",
            "entropy",
        ],
    );
    let mut picks = Table::new("acquisitions", &["rep", "t", "x1", "x2", "class", "score"]);
    for (r, (problem, arm, design_time)) in arms.iter().enumerate() {
        reps.push(vec![
            r.into(),
            Cell::Text(arm.seed.to_string()),
            arm.misclassified.into(),
            problem.test.len().into(),
        ]);
        for (i, p) in arm.probs.iter().enumerate() {
            let u = problem.test.point(i);
            let x = scale.from_unit(u);
            let mut row: Vec<Cell> = vec![
                r.into(),
                x[0].into(),
                x[1].into(),
                (label_unit(u) + 1).into(),
                (p.argmax() + 1).into(),
            ];
            row.extend(p.probs().iter().map(|&v| Cell::Float(v)));
            row.push(entropy(p).into());
            preds.push(row);
        }
        for a in &arm.acquisitions {
            let x = scale.from_unit(&a.point);
            picks.push(vec![
                r.into(),
                a.t.into(),
                x[0].into(),
                x[1].into(),
                (a.label + 1).into(),
                a.score.into(),
            ]);
        }
        for (k, v) in design_time.iter().chain(&arm.timings) {
            *timings.entry(k.clone()).or_insert(0.0) += v;
        }
    }
    let counts: Vec<f64> = arms.iter().map(|a| a.1.misclassified as f64).collect();
    let mut tables = vec![reps, preds];
    if active {
        tables.push(picks);
    }
    Ok(Report {
        experiment: cfg.experiment.name().into(),
        version: VERSION.into(),
        config: serde_json::to_value(cfg)?,
        summary: json!({
            "misclassified": arms.iter().map(|a| a.1.misclassified).collect::<Vec<_>>(),
            "mean_misclassified": mean(&counts),
            "test_size": cfg.test_size,
        }),
        timings,
        tables,
    })
}

pub fn run_class_static(cfg: &RunConfig) -> Result<Report> {
    run(
        &RunConfig {
            experiment: Experiment::ClassStatic,
            ..cfg.clone()
        },
        false,
    )
}

pub fn run_class_al(cfg: &RunConfig) -> Result<Report> {
    run(
        &RunConfig {
            experiment: Experiment::ClassAl,
            ..cfg.clone()
        },
        true,
    )
}
