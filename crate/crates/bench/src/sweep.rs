//! Monte-Carlo evaluation of (preprocessing, estimator) pipelines.

use std::fs;
use std::path::Path;

use doa_core::covariance::{default_subarray_size, empirical_covariance, forward_backward, spatial_smoothing, CovarianceLike};
use doa_core::estimators::{broadband_music, DoaEstimate};
use doa_core::rng::substream_seed;
use doa_core::signal::{generate, sample_scenario, DatasetSample, Scenario, SignalKind};
use doa_core::CMatrix;
use serde::Serialize;
use subspacenet::checkpoint::load_checkpoint_for;
use subspacenet::eval::{estimate, EvalReport};
use subspacenet::model::ModelParameters;

use crate::config::{Method, Preprocessing, RunConfig};
use crate::error::{io_context, BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub estimator: String,
    pub preprocessing: String,
    pub sweep_value: Option<f64>,
    pub rmspe_mean: f64,
    pub rmspe_std: f64,
    /// `10·log10` of the mean squared periodic error.
    pub mspe_db: f64,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    pub sweep_axis: Option<String>,
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("estimator,preprocessing,sweep_axis,sweep_value,rmspe_mean,rmspe_std,mspe_db,trials,failures\n");
        let axis = self.sweep_axis.as_deref().unwrap_or("");
        for r in &self.rows {
            let value = r.sweep_value.map(|v| format!("{v}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{axis},{value},{:.12e},{:.12e},{:.6},{},{}\n",
                r.estimator, r.preprocessing, r.rmspe_mean, r.rmspe_std, r.mspe_db, r.trials, r.failures
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// Row for `(estimator, preprocessing)` at `sweep_value`.
    pub fn find(&self, estimator: &str, preprocessing: &str, sweep_value: Option<f64>) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.preprocessing == preprocessing && r.sweep_value == sweep_value)
    }

    /// Writes `table.csv` and `table.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        io_context(fs::create_dir_all(dir), || format!("cannot create {}", dir.display()))?;
        io_context(fs::write(dir.join("table.csv"), self.to_csv()), || "cannot write table.csv".into())?;
        io_context(fs::write(dir.join("table.json"), self.to_json()), || "cannot write table.json".into())
    }
}

/// Covariance input for one preprocessing choice. `subarray` overrides the
/// default smoothing subarray size.
pub fn preprocess(pre: Preprocessing, x: &CMatrix, model: Option<&ModelParameters>, subarray: Option<usize>) -> Result<CovarianceLike> {
    Ok(match pre {
        Preprocessing::None => empirical_covariance(x)?,
        Preprocessing::Sps => spatial_smoothing(x, subarray.unwrap_or_else(|| default_subarray_size(x.nrows())))?,
        Preprocessing::Fb => forward_backward(&empirical_covariance(x)?),
        Preprocessing::Ssn => model
            .ok_or_else(|| BenchError::Config("preprocessing 'ssn' needs a checkpoint".into()))?
            .surrogate_covariance(x)?,
    })
}

/// One pipeline run with the true source count; estimator failures are
/// returned as `Err` for scoring, preprocessing failures abort.
pub fn run_pipeline(
    method: Method,
    pre: Preprocessing,
    scenario: &Scenario,
    sample: &DatasetSample,
    model: Option<&ModelParameters>,
    config: &RunConfig,
) -> Result<doa_core::Result<DoaEstimate>> {
    let m = sample.true_thetas.len();
    match method {
        Method::Covariance(e) => {
            let cov = preprocess(pre, &sample.snapshots, model, config.sps_subarray)?;
            Ok(estimate(e, &cov, Some(m)))
        }
        Method::BroadbandMusic => match scenario.signal_kind {
            SignalKind::Ofdm { bandwidth_hz, sample_rate_hz, .. } => {
                Ok(broadband_music(&sample.snapshots, m, config.num_bins, sample_rate_hz, bandwidth_hz))
            }
            SignalKind::Narrowband => Err(BenchError::Config("bb-music needs an ofdm scenario".into())),
        },
    }
}

/// Loads the configured checkpoint, checking it against the array size.
pub fn load_model(config: &RunConfig) -> Result<Option<ModelParameters>> {
    match &config.checkpoint {
        Some(path) => {
            let p = load_checkpoint_for(path, config.scenario.n_sensors)
                .map_err(|e| BenchError::Config(format!("checkpoint {}: {e}", path.display())))?;
            Ok(Some(p))
        }
        None => Ok(None),
    }
}

/// Trial `k` at `value`: the seed depends on the sweep value itself, so a
/// cell rerun alone reproduces its row.
pub fn trial_scenario(config: &RunConfig, value: Option<f64>) -> Result<Scenario> {
    let mut s = config.scenario_at(value)?;
    s.rng_seed = substream_seed(config.seed, value.map_or(u64::MAX, f64::to_bits));
    Ok(s)
}

pub fn run_sweep(config: &RunConfig) -> Result<MetricsTable> {
    let model = load_model(config)?;
    run_sweep_with(config, model.as_ref())
}

/// [`run_sweep`] with an already loaded model.
pub fn run_sweep_with(config: &RunConfig, model: Option<&ModelParameters>) -> Result<MetricsTable> {
    config.validate()?;
    let methods = config.methods()?;
    let pres = config.preprocessings()?;
    if pres.contains(&Preprocessing::Ssn) && model.is_none() {
        return Err(BenchError::Config("preprocessing 'ssn' needs a checkpoint".into()));
    }
    if let Some(m) = model {
        m.check_sensors(config.scenario.n_sensors).map_err(|e| BenchError::Config(e.to_string()))?;
    }
    let mut pipelines = Vec::new();
    for &method in &methods {
        for &pre in &pres {
            if method == Method::BroadbandMusic && pre != Preprocessing::None {
                continue;
            }
            pipelines.push((method, pre));
        }
    }
    let mut rows = Vec::new();
    for value in config.sweep_values() {
        let template = trial_scenario(config, value)?;
        let mut preds: Vec<Vec<(doa_core::Result<DoaEstimate>, Vec<f64>)>> = (0..pipelines.len()).map(|_| Vec::with_capacity(config.trials)).collect();
        for trial in 0..config.trials {
            let scenario = sample_scenario(&template, trial as u64);
            let sample = generate(&scenario)?;
            for (k, &(method, pre)) in pipelines.iter().enumerate() {
                let est = run_pipeline(method, pre, &scenario, &sample, model, config)?;
                preds[k].push((est, sample.true_thetas.clone()));
            }
        }
        for (&(method, pre), p) in pipelines.iter().zip(preds) {
            let report = EvalReport::from_predictions(p)?;
            let mspe = report.per_sample.iter().map(|e| e * e).sum::<f64>() / report.per_sample.len() as f64;
            rows.push(MetricsRow {
                estimator: method.name().into(),
                preprocessing: pre.name().into(),
                sweep_value: value,
                rmspe_mean: report.stats.mean,
                rmspe_std: report.stats.std,
                mspe_db: 10.0 * mspe.log10(),
                trials: report.stats.count,
                failures: report.failures,
            });
        }
    }
    Ok(MetricsTable { sweep_axis: config.sweep.as_ref().map(|s| s.axis.name().to_string()), rows })
}
