//! Particle learning on a user-supplied CSV.

use gpsmc::design::{posterior_class_probs, posterior_mean};
use gpsmc::{
    entropy, ClassificationModel, Dataset, ParticleModel, ParticleSet, PriorSpec, RegressionModel,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::data::{InputScaling, OutputScaling};
use crate::error::{ExperimentError, Result};
use crate::io::{ingest_csv, NumericTable};
use crate::report::{Cell, Report, Table, Timings, VERSION};
use crate::seeded_stream;

fn history_table<T: gpsmc::Scalar, M: ParticleModel<T>>(ps: &ParticleSet<T, M>) -> Table {
    let mut t = Table::new("history", &["t", "ess", "unique_params"]);
    for h in ps.history() {
        t.push(vec![h.t.into(), h.ess.into(), h.unique_params.into()]);
    }
    t
}

fn write_snapshot<M: ParticleModel<f64>>(cfg: &RunConfig, ps: &ParticleSet<f64, M>) -> Result<()> {
    if let Some(path) = &cfg.snapshot {
        std::fs::write(path, ps.to_json()?)?;
    }
    Ok(())
}

fn mean_params<M: ParticleModel<f64>>(ps: &ParticleSet<f64, M>) -> serde_json::Value {
    let records = ps.records();
    let n = records.len() as f64;
    let per_process = records[0].params.len();
    let means: Vec<[f64; 2]> = (0..per_process)
        .map(|m| {
            let d = records.iter().map(|r| r.params[m].d()).sum::<f64>() / n;
            let g = records.iter().map(|r| r.params[m].g()).sum::<f64>() / n;
            [d, g]
        })
        .collect();
    json!(means)
}

/// Regression fit of `response` on the remaining columns.
pub fn fit_regression(cfg: &RunConfig, table: &NumericTable, response: &str) -> Result<Report> {
    let mut timer = Timings::default();
    let x_raw = table.matrix_without(&[response])?;
    let y_raw = table.column(response)?;
    let inputs = InputScaling::from_data(&x_raw);
    let outputs = OutputScaling::from_data(&y_raw);
    let x = inputs.matrix_to_unit(&x_raw);
    let data = Dataset::from_parts(x.clone(), y_raw.iter().map(|&v| outputs.scale(v)).collect())?;
    let ps = timer.time("fit", || {
        ParticleSet::initialize(
            RegressionModel::default(),
            cfg.engine(PriorSpec::improper(), cfg.seed),
            data,
        )
    })?;
    let mut fitted = Table::new("fitted", &["row", "y", "mean"]);
    for (i, row) in x.row_iter().enumerate() {
        fitted.push(vec![
            i.into(),
            y_raw[i].into(),
            outputs.unscale(posterior_mean(&ps, row)).into(),
        ]);
    }
    write_snapshot(cfg, &ps)?;
    Ok(Report {
        experiment: cfg.experiment.name().into(),
        version: VERSION.into(),
        config: serde_json::to_value(cfg)?,
        summary: json!({
            "rows": y_raw.len(),
            "inputs": inputs,
            "outputs": outputs,
            "posterior_mean_d_g": mean_params(&ps),
            "unique_params": ps.unique_param_count(),
        }),
        timings: timer.into_map(),
        tables: vec![fitted, history_table(&ps)],
    })
}

/// Classification fit of `class` on the remaining columns. Distinct class
/// values are mapped to `0..M` in ascending order.
pub fn fit_classification(cfg: &RunConfig, table: &NumericTable, class: &str) -> Result<Report> {
    let mut timer = Timings::default();
    let x_raw = table.matrix_without(&[class])?;
    let raw_labels = table.column(class)?;
    let mut levels = raw_labels.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 2 {
        return Err(ExperimentError::Config(format!(
            "column `{class}` needs at least two classes"
        )));
    }
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|v| levels.partition_point(|l| l < v))
        .collect();
    let inputs = InputScaling::from_data(&x_raw);
    let x = inputs.matrix_to_unit(&x_raw);
    let model = ClassificationModel {
        n_classes: levels.len(),
        fold_size: cfg.fold_size,
        latent_draws: cfg.latent_draws,
    };
    let data = Dataset::from_parts(x.clone(), labels.clone())?;
    let ps = timer.time("fit", || {
        ParticleSet::initialize(
            model,
            cfg.engine(PriorSpec::proper_default(), cfg.seed),
            data,
        )
    })?;
    let mut header = vec!["row".to_string(), "class".into(), "predicted".into()];
    header.extend(levels.iter().map(|l| format!("p_{l}")));
    header.push("entropy".into());
    let mut fitted = Table {
        name: "fitted".into(),
        header,
        rows: Vec::new(),
    };
    let mut correct = 0;
    for (i, row) in x.row_iter().enumerate() {
        let probs = posterior_class_probs(&ps, row, &mut seeded_stream(cfg.seed, 1000 + i as u64))?;
        correct += usize::from(probs.argmax() == labels[i]);
        let mut cells: Vec<Cell> = vec![
            i.into(),
            raw_labels[i].into(),
            levels[probs.argmax()].into(),
        ];
        cells.extend(probs.probs().iter().map(|&p| Cell::Float(p)));
        cells.push(entropy(&probs).into());
        fitted.push(cells);
    }
    write_snapshot(cfg, &ps)?;
    Ok(Report {
        experiment: cfg.experiment.name().into(),
        version: VERSION.into(),
        config: serde_json::to_value(cfg)?,
        summary: json!({
            "rows": labels.len(),
            "classes": levels,
            "inputs": inputs,
            "training_accuracy": correct as f64 / labels.len() as f64,
            "posterior_mean_d_g": mean_params(&ps),
            "unique_params": ps.unique_param_count(),
        }),
        timings: timer.into_map(),
        tables: vec![fitted, history_table(&ps)],
    })
}

pub fn run_fit(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let path = cfg.input.as_ref().expect("validated");
    let table = ingest_csv(path)?;
    match (&cfg.response, &cfg.class_column) {
        (Some(r), None) => fit_regression(cfg, &table, r),
        (None, Some(c)) => fit_classification(cfg, &table, c),
        _ => unreachable!("validated"),
    }
}
