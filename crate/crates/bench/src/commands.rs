//! The work behind each CLI subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use doa_core::dataset_io::{load_dataset, save_dataset};
use doa_core::signal::{generate_mixed_dataset, DatasetSample};
use subspacenet::checkpoint::save_checkpoint;
use subspacenet::model::ModelParameters;
use subspacenet::trainer::{train_with, LossReport};

use crate::config::RunConfig;
use crate::diagnostics::{emit_diagnostics, DiagnosticKind, Manifest};
use crate::error::{io_context, Result};
use crate::sweep::{load_model, run_sweep_with, MetricsTable};

pub const DATASET_FILE: &str = "dataset.ssn";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";

fn ensure_dir(dir: &Path) -> Result<()> {
    io_context(fs::create_dir_all(dir), || format!("cannot create {}", dir.display()))
}

/// Training samples for `config`: `training.samples` draws, with source
/// counts from `training.source_counts` when given.
pub fn training_dataset(config: &RunConfig) -> Result<Vec<DatasetSample>> {
    let template = config.scenario_at(None)?;
    let counts = if config.training.source_counts.is_empty() {
        vec![template.num_sources]
    } else {
        config.training.source_counts.clone()
    };
    Ok(generate_mixed_dataset(&template, config.training.samples, &counts, &[template.num_snapshots])?)
}

pub fn simulate(config: &RunConfig, out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let path = out.join(DATASET_FILE);
    save_dataset(&path, &training_dataset(config)?)?;
    Ok(path)
}

#[derive(Debug)]
pub struct TrainOutput {
    pub model: ModelParameters,
    pub report: LossReport,
    pub checkpoint: PathBuf,
}

/// Trains from `dataset` (or a fresh simulation) and writes the checkpoint
/// and per-epoch log.
pub fn train(config: &RunConfig, dataset: Option<&Path>, out: &Path) -> Result<TrainOutput> {
    config.validate()?;
    ensure_dir(out)?;
    let data = match dataset {
        Some(p) => load_dataset(p)?,
        None => training_dataset(config)?,
    };
    let hp = config.hyperparameters();
    let init = ModelParameters::init(config.scenario.n_sensors, hp.lags, hp.epsilon, config.seed)?;
    let (model, report) = train_with(&data, &hp, init, |e| {
        log::info!("epoch {} train {:.5} val {:.5} clamps {} root warnings {}", e.epoch, e.train_rmspe, e.val_rmspe, e.gap_clamps, e.root_warnings)
    })?;
    let checkpoint = out.join(CHECKPOINT_FILE);
    save_checkpoint(&model, &checkpoint)?;
    io_context(fs::write(out.join(TRAIN_LOG_FILE), report.to_csv()), || format!("cannot write {TRAIN_LOG_FILE}"))?;
    Ok(TrainOutput { model, report, checkpoint })
}

pub fn eval(config: &RunConfig, out: &Path) -> Result<MetricsTable> {
    let model = load_model(config)?;
    let table = run_sweep_with(config, model.as_ref())?;
    table.write(out)?;
    Ok(table)
}

pub fn diagnostics(config: &RunConfig, kinds: &[DiagnosticKind], out: &Path) -> Result<Manifest> {
    let model = load_model(config)?;
    emit_diagnostics(config, model.as_ref(), kinds, out)
}

/// Applies command-line overrides to a loaded config.
pub fn with_overrides(mut config: RunConfig, seed: Option<u64>, trials: Option<usize>, checkpoint: Option<PathBuf>, out: Option<PathBuf>) -> Result<RunConfig> {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(c) = checkpoint {
        config.checkpoint = Some(c);
    }
    if let Some(o) = out {
        config.out_dir = o;
    }
    config.validate()?;
    Ok(config)
}
