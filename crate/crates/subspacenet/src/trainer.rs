//! Supervised training with the RMSPE loss through differentiable root-MUSIC.

use doa_core::estimators::estimate_num_sources;
use doa_core::linalg::hermitian_eigh;
use doa_core::rng::substream;
use doa_core::signal::DatasetSample;
use doa_core::{DoaError, Result};
use rand::seq::SliceRandom;
use ssn_autodiff::{adam_step, decode_matrix, AdamConfig, AdamState, Tape, Tensor, Var};

use crate::diff_rootmusic::differentiable_rootmusic;
use crate::eval::{estimate, EvalReport, Estimator};
use crate::features::network_input;
use crate::loss::rmspe_loss;
use crate::model::{ModelParameters, DEFAULT_EPSILON, DEFAULT_LAGS};

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub epsilon: f64,
    pub lags: usize,
    pub seed: u64,
    /// Supply the true source count to root selection.
    pub m_known: bool,
    pub val_fraction: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 50,
            epsilon: DEFAULT_EPSILON,
            lags: DEFAULT_LAGS,
            seed: 0,
            m_known: true,
            val_fraction: 0.1,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(DoaError::Domain(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(DoaError::Domain("batch size and epoch count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(DoaError::Domain(format!("validation fraction {} outside [0, 1)", self.val_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_rmspe: f64,
    pub val_rmspe: f64,
    pub gap_clamps: usize,
    pub root_warnings: usize,
    pub shortfalls: usize,
    /// Selected roots whose gradient was taken.
    pub root_evaluations: usize,
    /// Samples whose polynomial could not be rooted.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub lr_halved: bool,
}

impl LossReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_rmspe,val_rmspe,gap_clamps,root_warnings\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{:.12e},{:.12e},{},{}\n", e.epoch, e.train_rmspe, e.val_rmspe, e.gap_clamps, e.root_warnings));
        }
        s
    }

    /// `(gap_clamps + root_warnings) / root_evaluations` over all epochs.
    pub fn warning_rate(&self) -> f64 {
        let warn: usize = self.epochs.iter().map(|e| e.gap_clamps + e.root_warnings).sum();
        let evals: usize = self.epochs.iter().map(|e| e.root_evaluations).sum();
        if evals == 0 {
            0.0
        } else {
            warn as f64 / evals as f64
        }
    }
}

/// Loss and weight gradients for one sample.
#[derive(Debug, Clone)]
pub struct SampleGradient {
    pub loss: f64,
    pub grads: Vec<Tensor>,
    pub gap_clamps: usize,
    pub root_warnings: usize,
    pub shortfall: usize,
    pub selected: usize,
}

fn source_count(r: Var<'_>, truth: &[f64], m_known: bool) -> usize {
    let n = r.shape()[1];
    let m = if m_known {
        truth.len()
    } else {
        estimate_num_sources(&hermitian_eigh(&decode_matrix(&r.value())).0)
    };
    m.clamp(1, n - 1)
}

/// Forward, differentiable root-MUSIC, RMSPE and backward for one sample.
pub fn sample_gradient(model: &ModelParameters, input: &Tensor, truth: &[f64], m_known: bool) -> Result<SampleGradient> {
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = model.weights.iter().map(|w| tape.leaf(w.clone())).collect();
    let r = model.forward(&vars, tape.constant(input.clone()))?;
    let m = source_count(r, truth, m_known);
    let roots = differentiable_rootmusic(r, m)?;
    let loss = rmspe_loss(roots.angles, truth)?;
    let g = tape.backward(loss);
    Ok(SampleGradient {
        loss: loss.item(),
        grads: vars.iter().map(|v| g.get_or_zeros(*v)).collect(),
        gap_clamps: tape.gap_clamps(),
        root_warnings: tape.root_warnings(),
        shortfall: roots.shortfall,
        selected: m - roots.shortfall,
    })
}

/// Mean inference RMSPE with root-MUSIC and the true source count.
fn validation_rmspe(model: &ModelParameters, set: &[&DatasetSample]) -> Result<f64> {
    let preds = set.iter().map(|s| {
        let est = model.surrogate_covariance(&s.snapshots).and_then(|c| estimate(Estimator::RootMusic, &c, Some(s.true_thetas.len())));
        (est, s.true_thetas.clone())
    });
    Ok(EvalReport::from_predictions(preds.collect::<Vec<_>>())?.stats.mean)
}

/// Seeded split into (train, validation) index lists. With too few samples
/// for both, everything trains and validation reuses the training set.
pub fn split_indices(count: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..count).collect();
    idx.shuffle(&mut substream(seed, u64::MAX - 1));
    let n_val = (count as f64 * val_fraction).round() as usize;
    if n_val == 0 || n_val >= count {
        return (idx.clone(), idx);
    }
    let val = idx.split_off(count - n_val);
    (idx, val)
}

struct EpochOutcome {
    record: EpochRecord,
    non_finite: bool,
}

fn run_epoch(
    model: &mut ModelParameters,
    adam: &mut AdamState,
    cfg: &AdamConfig,
    order: &[usize],
    inputs: &[Tensor],
    dataset: &[DatasetSample],
    hp: &Hyperparameters,
) -> Result<EpochOutcome> {
    let mut rec = EpochRecord::default();
    let mut loss_sum = 0.0;
    let mut counted = 0usize;
    for batch in order.chunks(hp.batch_size) {
        let mut acc: Vec<Tensor> = model.weights.iter().map(|w| Tensor::zeros(w.shape())).collect();
        let mut used = 0usize;
        for &i in batch {
            let s = match sample_gradient(model, &inputs[i], &dataset[i].true_thetas, hp.m_known) {
                Ok(s) => s,
                Err(DoaError::Domain(_)) | Err(DoaError::Numerical(_)) => {
                    rec.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if !s.loss.is_finite() || s.grads.iter().any(|g| g.data().iter().any(|v| !v.is_finite())) {
                return Ok(EpochOutcome { record: rec, non_finite: true });
            }
            rec.gap_clamps += s.gap_clamps;
            rec.root_warnings += s.root_warnings;
            rec.shortfalls += s.shortfall;
            rec.root_evaluations += s.selected;
            loss_sum += s.loss;
            counted += 1;
            used += 1;
            for (a, g) in acc.iter_mut().zip(&s.grads) {
                a.add_assign(g);
            }
        }
        if used == 0 {
            continue;
        }
        let inv = 1.0 / used as f64;
        for a in &mut acc {
            a.data_mut().iter_mut().for_each(|v| *v *= inv);
        }
        adam_step(&mut model.weights, &acc, adam, cfg);
    }
    rec.train_rmspe = if counted > 0 { loss_sum / counted as f64 } else { f64::NAN };
    Ok(EpochOutcome { record: rec, non_finite: false })
}

/// Adam on mini-batches of per-sample RMSPE. Returns the parameters of the
/// epoch with the lowest validation RMSPE. A non-finite loss restarts the
/// epoch from its starting point with half the learning rate; a second one
/// is an error.
pub fn train(dataset: &[DatasetSample], hp: &Hyperparameters, initial: ModelParameters) -> Result<(ModelParameters, LossReport)> {
    train_with(dataset, hp, initial, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    dataset: &[DatasetSample],
    hp: &Hyperparameters,
    initial: ModelParameters,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParameters, LossReport)> {
    hp.validate()?;
    if dataset.is_empty() {
        return Err(DoaError::Domain("training needs at least one sample".into()));
    }
    if initial.lags != hp.lags || initial.epsilon != hp.epsilon {
        return Err(DoaError::Domain(format!(
            "initial model has {} lags and epsilon {}, hyperparameters ask for {} and {}",
            initial.lags, initial.epsilon, hp.lags, hp.epsilon
        )));
    }
    let n = initial.n_sensors;
    for (i, s) in dataset.iter().enumerate() {
        if s.snapshots.nrows() != n || s.snapshots.ncols() == 0 || s.true_thetas.is_empty() {
            return Err(DoaError::Domain(format!("sample {i} does not fit an N = {n} model or has no snapshots or labels")));
        }
    }
    let inputs: Vec<Tensor> = dataset.iter().map(|s| network_input(&s.snapshots, hp.lags)).collect::<Result<_>>()?;
    let (train_idx, val_idx) = split_indices(dataset.len(), hp.val_fraction, hp.seed);
    let val_set: Vec<&DatasetSample> = val_idx.iter().map(|&i| &dataset[i]).collect();

    let mut model = initial;
    let mut adam = AdamState::new(&model.weights);
    let mut cfg = AdamConfig { lr: hp.learning_rate, ..AdamConfig::default() };
    let mut report = LossReport::default();
    let mut best: Option<(f64, ModelParameters)> = None;
    let mut train_hist = Vec::new();
    let mut val_hist = Vec::new();

    for epoch in 1..=hp.max_epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut substream(hp.seed, epoch as u64));
        let (start_model, start_adam) = (model.clone(), adam.clone());
        let mut out = run_epoch(&mut model, &mut adam, &cfg, &order, &inputs, dataset, hp)?;
        if out.non_finite {
            if report.lr_halved {
                return Err(DoaError::Numerical(format!("non-finite loss in epoch {epoch} after halving the learning rate")));
            }
            report.lr_halved = true;
            cfg.lr *= 0.5;
            model = start_model;
            adam = start_adam;
            out = run_epoch(&mut model, &mut adam, &cfg, &order, &inputs, dataset, hp)?;
            if out.non_finite {
                return Err(DoaError::Numerical(format!("non-finite loss in epoch {epoch} after halving the learning rate")));
            }
        }
        let mut rec = out.record;
        rec.epoch = epoch;
        rec.val_rmspe = validation_rmspe(&model, &val_set)?;
        train_hist.push(rec.train_rmspe);
        val_hist.push(rec.val_rmspe);
        on_epoch(&rec);
        report.epochs.push(rec);
        if best.as_ref().is_none_or(|(v, _)| rec.val_rmspe < *v) {
            best = Some((rec.val_rmspe, model.clone()));
            report.best_epoch = epoch;
        }
    }
    let (_, mut best_model) = best.expect("at least one epoch ran");
    best_model.meta.epochs = report.epochs.len();
    best_model.meta.train_loss = train_hist;
    best_model.meta.val_loss = val_hist;
    Ok((best_model, report))
}
