use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gpsmc::ResampleScheme;
use gpsmc_experiments::classification::{run_class_al, run_class_static};
use gpsmc_experiments::fit::run_fit;
use gpsmc_experiments::optimization::run_ei_optimization;
use gpsmc_experiments::report::VERSION;
use gpsmc_experiments::sinusoid::run_sinusoid_regression;
use gpsmc_experiments::{Experiment, Format, Preset, RunConfig};

#[derive(Parser)]
#[command(name = "gpsmc", version = VERSION, about = "Particle learning experiments for Gaussian processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// PL against MCMC on noisy 1-d sinusoid replications.
    Sinusoid(Common),
    /// Three-class classification from a static maximum entropy design.
    ClassStatic(Common),
    /// Three-class classification with entropy-driven active learning.
    ClassAl(Common),
    /// Expected-improvement minimization of a noisy 2-d surface.
    EiOpt(Common),
    /// Fit a user CSV with a header row.
    Fit(FitArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t0: Option<usize>,
    /// Final design size T.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    no_rejuvenate: bool,
    #[arg(long, value_parser = parse_scheme)]
    resample: Option<ResampleScheme>,
    /// Smooth acquisition scores with a distance kernel (class-al).
    #[arg(long)]
    smoothing: bool,
    /// Output directory; results are only printed when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// TOML file whose keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for particle execution.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    #[arg(long, conflicts_with = "class", required_unless_present = "class")]
    response: Option<String>,
    #[arg(long)]
    class: Option<String>,
    /// Write the fitted particles as JSON.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn parse_scheme(s: &str) -> std::result::Result<ResampleScheme, String> {
    s.parse().map_err(|e: gpsmc::Error| e.to_string())
}

fn build(experiment: Experiment, c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::preset(experiment, c.preset);
    if let Some(v) = c.particles {
        cfg.particles = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.t0 {
        cfg.t0 = v;
    }
    if let Some(v) = c.rounds {
        cfg.rounds = v;
    }
    if let Some(v) = c.replications {
        cfg.replications = v;
    }
    if let Some(v) = c.resample {
        cfg.resample = v;
    }
    cfg.rejuvenate &= !c.no_rejuvenate;
    cfg.smoothing |= c.smoothing;
    cfg.out = c.out.clone().or(cfg.out);
    cfg.format = c.format;
    cfg.threads = c.threads.or(cfg.threads);
    if let Some(path) = &c.config {
        cfg = cfg
            .merge_toml_file(path)
            .with_context(|| format!("reading {}", path.display()))?;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = match &cli.command {
        Command::Sinusoid(c) => build(Experiment::Sinusoid, c)?,
        Command::ClassStatic(c) => build(Experiment::ClassStatic, c)?,
        Command::ClassAl(c) => build(Experiment::ClassAl, c)?,
        Command::EiOpt(c) => build(Experiment::EiOpt, c)?,
        Command::Fit(f) => {
            let mut cfg = build(Experiment::Fit, &f.common)?;
            cfg.input = Some(f.input.clone());
            cfg.response = f.response.clone().or(cfg.response);
            cfg.class_column = f.class.clone().or(cfg.class_column);
            cfg.snapshot = f.snapshot.clone().or(cfg.snapshot);
            cfg
        }
    };
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let report = match cfg.experiment {
        Experiment::Sinusoid => run_sinusoid_regression(&cfg),
        Experiment::ClassStatic => run_class_static(&cfg),
        Experiment::ClassAl => run_class_al(&cfg),
        Experiment::EiOpt => run_ei_optimization(&cfg),
        Experiment::Fit => run_fit(&cfg),
    }?;
    match &cfg.out {
        Some(dir) => {
            report.write(dir, cfg.format)?;
            log::info!("wrote {} results to {}", report.experiment, dir.display());
        }
        None => println!("{}", report.summary_json()?),
    }
    Ok(())
}
