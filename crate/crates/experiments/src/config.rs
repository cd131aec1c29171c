//! Run configuration: scale presets, flag overrides and TOML files.

use std::path::{Path, PathBuf};

use gpsmc::{EngineConfig, FMinMode, PriorSpec, ResampleScheme, Window};
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Sinusoid,
    ClassStatic,
    ClassAl,
    EiOpt,
    Fit,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sinusoid => "sinusoid",
            Self::ClassStatic => "class-static",
            Self::ClassAl => "class-al",
            Self::EiOpt => "ei-opt",
            Self::Fit => "fit",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Paper,
    #[default]
    Desk,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything an experiment needs. Built from a preset, then overridden by
/// command-line flags, then by a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub preset: Preset,
    pub seed: u64,
    pub particles: usize,
    pub t0: usize,
    /// Final design size `T`.
    pub rounds: usize,
    pub replications: usize,
    pub test_size: usize,
    /// Fresh candidates per EI round, or the size of the active-learning pool.
    pub candidates: usize,
    pub noise_sd: f64,
    pub init_mh_rounds: usize,
    pub init_thin: usize,
    pub mcmc_iters: usize,
    pub mcmc_thin: usize,
    pub rejuvenate: bool,
    pub resample: ResampleScheme,
    pub window_u: f64,
    pub window_l: f64,
    pub window_gamma: f64,
    pub latent_draws: usize,
    pub fold_size: usize,
    pub smoothing: bool,
    pub fmin: FMinMode,
    pub parallel: bool,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Input CSV for `fit`.
    pub input: Option<PathBuf>,
    /// Response column for `fit`; mutually exclusive with `class_column`.
    pub response: Option<String>,
    pub class_column: Option<String>,
    /// Path for a particle snapshot written by `fit`.
    pub snapshot: Option<PathBuf>,
}

impl RunConfig {
    pub fn preset(experiment: Experiment, preset: Preset) -> Self {
        let paper = preset == Preset::Paper;
        let mut cfg = Self {
            experiment,
            preset,
            seed: 1,
            particles: if paper { 1000 } else { 200 },
            t0: 5,
            rounds: 50,
            replications: 1,
            test_size: 1000,
            candidates: 0,
            noise_sd: 0.0,
            init_mh_rounds: if paper { 10_000 } else { 2_000 },
            init_thin: 10,
            mcmc_iters: 10_000,
            mcmc_thin: 10,
            rejuvenate: true,
            resample: ResampleScheme::Multinomial,
            window_u: 4.0,
            window_l: 3.0,
            window_gamma: 0.0,
            latent_draws: gpsmc::classify::DEFAULT_LATENT_DRAWS,
            fold_size: gpsmc::classify::DEFAULT_FOLD_SIZE,
            smoothing: false,
            fmin: FMinMode::MeanSurface,
            parallel: true,
            threads: None,
            out: None,
            format: Format::Csv,
            input: None,
            response: None,
            class_column: None,
            snapshot: None,
        };
        match experiment {
            Experiment::Sinusoid => {
                cfg.replications = if paper { 100 } else { 20 };
                cfg.noise_sd = 0.1;
            }
            Experiment::ClassStatic | Experiment::ClassAl => {
                cfg.t0 = 25;
                cfg.rounds = if paper { 125 } else { 60 };
                cfg.test_size = if paper { 1000 } else { 500 };
                cfg.candidates = 300;
            }
            Experiment::EiOpt => {
                cfg.t0 = 7;
                cfg.candidates = 40;
                cfg.noise_sd = 0.001;
            }
            Experiment::Fit => {
                cfg.rounds = 0;
                cfg.test_size = 0;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.particles == 0
            || self.replications == 0
            || self.init_thin == 0
            || self.mcmc_thin == 0
        {
            return bad("particles, replications and thinning must be positive");
        }
        if self.experiment != Experiment::Fit {
            if self.t0 == 0 {
                return bad("t0 must be positive");
            }
            if self.rounds <= self.t0 {
                return bad("rounds (T) must exceed t0");
            }
        }
        match self.experiment {
            Experiment::Sinusoid if self.test_size == 0 => bad("test_size must be positive"),
            Experiment::ClassStatic | Experiment::ClassAl if self.test_size == 0 => {
                bad("test_size must be positive")
            }
            Experiment::ClassAl if self.candidates < self.rounds => {
                bad("candidate pool must hold the initial design and every acquisition")
            }
            Experiment::EiOpt if self.candidates == 0 => bad("candidates must be positive"),
            Experiment::Fit if self.input.is_none() => bad("fit needs an input CSV"),
            Experiment::Fit if self.response.is_some() == self.class_column.is_some() => {
                bad("fit needs exactly one of a response or a class column")
            }
            _ if !(self.noise_sd >= 0.0) => bad("noise_sd must be nonnegative"),
            _ => {
                Window::new(self.window_u, self.window_l)?;
                Ok(())
            }
        }
    }

    /// Engine settings for `seed` under `prior`.
    pub fn engine(&self, prior: PriorSpec<f64>, seed: u64) -> EngineConfig<f64> {
        EngineConfig {
            n_particles: self.particles,
            t0: self.t0,
            init_mh_rounds: self.init_mh_rounds,
            init_thin: self.init_thin,
            rejuvenate: self.rejuvenate,
            window: Window {
                u: self.window_u,
                l: self.window_l,
            },
            window_gamma: self.window_gamma,
            prior,
            resample: self.resample,
            seed,
            parallel: self.parallel,
        }
    }

    /// Applies every key present in `text` (TOML) on top of `self`.
    pub fn merge_toml(&self, text: &str) -> Result<Self> {
        let overrides: toml::Table =
            toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let mut base =
            toml::Table::try_from(self).map_err(|e| ExperimentError::Config(e.to_string()))?;
        for (k, v) in overrides {
            if !base.contains_key(&k) && !OPTIONAL_KEYS.contains(&k.as_str()) {
                return Err(ExperimentError::Config(format!("unknown key `{k}`")));
            }
            base.insert(k, v);
        }
        base.try_into()
            .map_err(|e: toml::de::Error| ExperimentError::Config(e.to_string()))
    }

    pub fn merge_toml_file(&self, path: &Path) -> Result<Self> {
        self.merge_toml(&std::fs::read_to_string(path)?)
    }
}

/// Keys that serialize to nothing while unset.
const OPTIONAL_KEYS: &[&str] = &[
    "threads",
    "out",
    "input",
    "response",
    "class_column",
    "snapshot",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for e in [
            Experiment::Sinusoid,
            Experiment::ClassStatic,
            Experiment::ClassAl,
            Experiment::EiOpt,
        ] {
            for p in [Preset::Paper, Preset::Desk] {
                RunConfig::preset(e, p).validate().unwrap();
            }
        }
        assert!(RunConfig::preset(Experiment::Fit, Preset::Desk)
            .validate()
            .is_err());
    }

    #[test]
    fn desk_sizes() {
        let c = RunConfig::preset(Experiment::ClassAl, Preset::Desk);
        assert_eq!(
            (c.particles, c.t0, c.rounds, c.test_size, c.candidates),
            (200, 25, 60, 500, 300)
        );
        let s = RunConfig::preset(Experiment::Sinusoid, Preset::Desk);
        assert_eq!((s.rounds, s.replications, s.t0), (50, 20, 5));
    }

    #[test]
    fn toml_overrides() {
        let c = RunConfig::preset(Experiment::EiOpt, Preset::Desk);
        let m = c
            .merge_toml("particles = 50\nresample = \"systematic\"\nout = \"results\"\n")
            .unwrap();
        assert_eq!(m.particles, 50);
        assert_eq!(m.resample, ResampleScheme::Systematic);
        assert_eq!(m.out, Some(PathBuf::from("results")));
        assert_eq!(m.t0, 7);
        assert!(c.merge_toml("particle = 3\n").is_err());
        assert!(c.merge_toml("particles = \"many\"\n").is_err());
    }

    #[test]
    fn rounds_must_exceed_t0() {
        let mut c = RunConfig::preset(Experiment::Sinusoid, Preset::Desk);
        c.rounds = c.t0;
        assert!(c.validate().is_err());
    }
}
