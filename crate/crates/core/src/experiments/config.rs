//! Flat `key = value` experiment configuration.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::export::MeshShape;
use crate::training::{OptimizerKind, DEFAULT_FD_STEP, DEFAULT_GAMMA, DEFAULT_SUBSPACE_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Classify,
    Reconstruct,
    Denoise,
    Sweep,
    Decompose,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Classify => "classify",
            Self::Reconstruct => "reconstruct",
            Self::Denoise => "denoise",
            Self::Sweep => "sweep",
            Self::Decompose => "decompose",
        }
    }

    /// Experiments that learn column amplitudes in a truncated subspace.
    fn uses_subspace(self) -> bool {
        matches!(self, Self::Reconstruct | Self::Denoise | Self::Sweep)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::Classify, Self::Reconstruct, Self::Denoise, Self::Sweep, Self::Decompose]
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// How the column learners of a reconstruction are organised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnNetworks {
    /// One network per distinct column target.
    PerColumn,
    /// One network fitted to all column input/target pairs at once.
    Shared,
}

impl FromStr for ColumnNetworks {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_column" => Ok(Self::PerColumn),
            "shared" => Ok(Self::Shared),
            other => Err(Error::Config(format!("unknown network layout `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Directory holding `images-idx3-ubyte` and `labels-idx1-ubyte`.
    pub dataset_path: PathBuf,
    pub seed: u64,
    pub modes: usize,
    pub cutoff: usize,
    pub depth: usize,
    pub classes: usize,
    /// Dataset index of the image used by reconstruct, denoise and sweep.
    pub digit_index: usize,
    pub noise_mean: f64,
    pub noise_std: f64,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub steps: usize,
    pub gamma: f64,
    pub out_dir: PathBuf,
    pub fd_step: f64,
    pub log_every: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub readout_displacement: bool,
    pub network: ColumnNetworks,
    pub sweep_stds: Vec<f64>,
    pub mesh: MeshShape,
    /// 3 denoises an RGB image assembled from three consecutive samples of
    /// the chosen digit.
    pub channels: usize,
    /// Network checkpoint to compile in the decompose experiment; a seeded
    /// random weight matrix is compiled when absent.
    pub checkpoint: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            dataset_path: PathBuf::from("data/mnist"),
            seed: 1,
            modes: 1,
            cutoff: 35,
            depth: 15,
            classes: 2,
            digit_index: 0,
            noise_mean: 0.5,
            noise_std: 0.1,
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.002,
            steps: 8000,
            gamma: DEFAULT_GAMMA,
            out_dir: PathBuf::from(format!("out/{experiment}")),
            fd_step: DEFAULT_FD_STEP,
            log_every: 100,
            train_size: 300,
            test_size: 200,
            readout_displacement: false,
            network: ColumnNetworks::PerColumn,
            sweep_stds: vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.30],
            mesh: MeshShape::Rectangular,
            channels: 1,
            checkpoint: None,
        };
        match experiment {
            Experiment::Classify => Self {
                modes: 2,
                cutoff: 8,
                depth: 1,
                learning_rate: 0.01,
                steps: 400,
                log_every: 10,
                ..base
            },
            Experiment::Reconstruct => base,
            Experiment::Denoise | Experiment::Sweep => Self { digit_index: 3, steps: 3000, ..base },
            Experiment::Decompose => Self { modes: 4, ..base },
        }
    }

    /// Starts from [`ExperimentConfig::defaults`] and applies every
    /// `key = value` line. Blank lines and lines starting with `#` are
    /// ignored; unknown or repeated keys are config errors.
    pub fn parse(text: &str, experiment: Experiment) -> Result<Self> {
        let mut config = Self::defaults(experiment);
        let mut seen = HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: `{key}` set twice", n + 1)));
            }
            config
                .set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(e))))?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                let named: Experiment = value.parse()?;
                if named != self.experiment {
                    return Err(Error::Config(format!(
                        "file is for `{named}` but `{}` was requested",
                        self.experiment
                    )));
                }
            }
            "dataset_path" => self.dataset_path = PathBuf::from(value),
            "seed" => self.seed = number(key, value)?,
            "modes" => self.modes = number(key, value)?,
            "cutoff" => self.cutoff = number(key, value)?,
            "depth" => self.depth = number(key, value)?,
            "classes" => self.classes = number(key, value)?,
            "digit_index" => self.digit_index = number(key, value)?,
            "noise_mean" => self.noise_mean = number(key, value)?,
            "noise_std" => self.noise_std = number(key, value)?,
            "optimizer" => self.optimizer = value.parse()?,
            "learning_rate" => self.learning_rate = number(key, value)?,
            "steps" => self.steps = number(key, value)?,
            "gamma" => self.gamma = number(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "fd_step" => self.fd_step = number(key, value)?,
            "log_every" => self.log_every = number(key, value)?,
            "train_size" => self.train_size = number(key, value)?,
            "test_size" => self.test_size = number(key, value)?,
            "readout_displacement" => self.readout_displacement = number(key, value)?,
            "network" => self.network = value.parse()?,
            "sweep_stds" => {
                self.sweep_stds = value
                    .split(',')
                    .map(|v| number(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "mesh" => self.mesh = value.parse()?,
            "channels" => self.channels = number(key, value)?,
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Rejects physically or structurally inconsistent settings.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.modes == 0 {
            return fail("modes must be >= 1".into());
        }
        if self.depth == 0 {
            return fail("depth must be >= 1".into());
        }
        if self.cutoff < 2 {
            return fail(format!("cutoff {} must be >= 2", self.cutoff));
        }
        if self.steps == 0 || self.log_every == 0 {
            return fail("steps and log_every must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return fail(format!("fd_step must be > 0, got {}", self.fd_step));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return fail(format!("gamma must be >= 0, got {}", self.gamma));
        }
        match self.experiment {
            Experiment::Classify => {
                if self.classes != self.modes {
                    return fail(format!("classes ({}) must equal modes ({})", self.classes, self.modes));
                }
                if !(2..=10).contains(&self.classes) {
                    return fail(format!("classes must be in 2..=10, got {}", self.classes));
                }
                if self.train_size == 0 || self.test_size == 0 {
                    return fail("train_size and test_size must be >= 1".into());
                }
            }
            e if e.uses_subspace() => {
                if self.modes != 1 {
                    return fail(format!("{e} uses single-mode learners, got modes = {}", self.modes));
                }
                if self.cutoff <= DEFAULT_SUBSPACE_DIM {
                    return fail(format!(
                        "cutoff {} must exceed the {DEFAULT_SUBSPACE_DIM}-level learning subspace",
                        self.cutoff
                    ));
                }
                if e != Experiment::Reconstruct {
                    if !(self.noise_std >= 0.0 && self.noise_std.is_finite() && self.noise_mean.is_finite()) {
                        return fail("noise_std must be >= 0 and noise_mean finite".into());
                    }
                    if self.sweep_stds.is_empty() || self.sweep_stds.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                        return fail("sweep_stds must be a non-empty list of values >= 0".into());
                    }
                    if self.channels != 1 && self.channels != 3 {
                        return fail(format!("channels must be 1 or 3, got {}", self.channels));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("`{key}` cannot take the value `{value}`")))
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}
