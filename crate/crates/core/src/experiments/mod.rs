//! Dataset ingestion, experiment runners and their emitted files.
//!
//! Each runner is a pure function of its config and data and returns a
//! [`Report`]; nothing touches the filesystem until [`Report::write_to`].

mod classify;
mod columns;
mod config;
mod decompose;
mod denoise;
mod mnist;
mod reconstruct;

pub use classify::run_classify;
pub use columns::{fit_columns, ColumnFits, ColumnJob};
pub use config::{ColumnNetworks, Experiment, ExperimentConfig};
pub use decompose::run_decompose;
pub use denoise::{run_denoise, run_sweep, SweepRow};
pub use mnist::{load_mnist, MnistSet, IMAGES_FILE, IMAGE_MAGIC, LABELS_FILE, LABEL_MAGIC};
pub use reconstruct::run_reconstruct;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::layers::fmt_f64;
use crate::training::{TrainConfig, TrainTrace};

/// Named scalar results plus the files an experiment emits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub metrics: Vec<(String, f64)>,
    files: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|m| m.1)
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(k, _)| k == name).map(|f| f.1.as_slice())
    }

    pub fn file_names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|f| f.0.as_str())
    }

    fn push_metric(&mut self, name: &str, value: f64) {
        self.metrics.push((name.to_string(), value));
    }

    fn add_file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn add_trace(&mut self, trace: &TrainTrace) -> Result<()> {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        self.add_file("trace.csv", buf);
        Ok(())
    }

    /// `metrics.csv` rendered from [`Report::metrics`].
    pub fn metrics_csv(&self) -> Vec<u8> {
        let mut out = String::from("metric,value\n");
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "{k},{}", fmt_f64(*v));
        }
        out.into_bytes()
    }

    /// Creates `dir` and writes every file plus `metrics.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
        }
        fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        Ok(())
    }
}

fn train_config(config: &ExperimentConfig, keep_best: bool) -> TrainConfig {
    TrainConfig {
        optimizer: config.optimizer,
        learning_rate: config.learning_rate,
        steps: config.steps,
        fd_step: config.fd_step,
        seed: config.seed,
        log_every: config.log_every,
        keep_best,
    }
}

/// Validates `config`, loads its dataset and runs the selected experiment.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    if config.experiment == Experiment::Decompose {
        return run_decompose(config);
    }
    let data = MnistSet::load_dir(&config.dataset_path)?;
    match config.experiment {
        Experiment::Classify => run_classify(config, &data),
        Experiment::Reconstruct => run_reconstruct(config, &data),
        Experiment::Denoise => run_denoise(config, &data),
        Experiment::Sweep => run_sweep(config, &data).map(|(report, _)| report),
        Experiment::Decompose => unreachable!("handled above"),
    }
}
