//! Classic estimators on any covariance, and dataset evaluation of a model.

use std::fmt;
use std::str::FromStr;

use doa_core::array::ArrayGeometry;
use doa_core::covariance::CovarianceLike;
use doa_core::estimators::{
    decompose, esprit_doa, music_doa, music_spectrum, mvdr_beampattern, rootmusic_doa, DoaEstimate,
    DEFAULT_GRID_RESOLUTION,
};
use doa_core::signal::DatasetSample;
use doa_core::{DoaError, Result};

use crate::loss::{rmspe, RmspeStats};
use crate::model::ModelParameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Music,
    RootMusic,
    Esprit,
    Mvdr,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Music, Estimator::RootMusic, Estimator::Esprit, Estimator::Mvdr];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Music => "music",
            Estimator::RootMusic => "rootmusic",
            Estimator::Esprit => "esprit",
            Estimator::Mvdr => "mvdr",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s.to_ascii_lowercase())
            .ok_or_else(|| DoaError::Domain(format!("unknown estimator '{s}' (expected music, rootmusic, esprit or mvdr)")))
    }
}

/// DOAs from `cov` assuming a nominal array of matching size. `m_hat = None`
/// estimates the source count from the eigenvalues. MVDR reports the `M̂`
/// highest beampattern peaks.
pub fn estimate(estimator: Estimator, cov: &CovarianceLike, m_hat: Option<usize>) -> Result<DoaEstimate> {
    let dec = decompose(cov, m_hat)?;
    let m = dec.num_sources_est;
    match estimator {
        Estimator::Music => {
            let geometry = ArrayGeometry::nominal(cov.dim())?;
            Ok(music_doa(&music_spectrum(&dec, &geometry, DEFAULT_GRID_RESOLUTION)?, m))
        }
        Estimator::RootMusic => Ok(rootmusic_doa(&dec, m)?.0),
        Estimator::Esprit => esprit_doa(cov, m),
        Estimator::Mvdr => {
            let geometry = ArrayGeometry::nominal(cov.dim())?;
            Ok(music_doa(&mvdr_beampattern(cov, &geometry, DEFAULT_GRID_RESOLUTION)?, m))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub stats: RmspeStats,
    /// Per-sample RMSPE in dataset order.
    pub per_sample: Vec<f64>,
    /// Samples where the estimator errored; scored as all-zero predictions.
    pub failures: usize,
    /// Total missing angles over all samples.
    pub shortfalls: usize,
}

impl EvalReport {
    pub fn from_predictions(preds: impl IntoIterator<Item = (Result<DoaEstimate>, Vec<f64>)>) -> Result<Self> {
        let mut per_sample = Vec::new();
        let mut failures = 0;
        let mut shortfalls = 0;
        for (pred, truth) in preds {
            let angles = match pred {
                Ok(est) => {
                    shortfalls += est.shortfall;
                    est.angles
                }
                Err(_) => {
                    failures += 1;
                    shortfalls += truth.len();
                    Vec::new()
                }
            };
            per_sample.push(rmspe(&angles, &truth)?);
        }
        Ok(Self { stats: RmspeStats::from_values(&per_sample), per_sample, failures, shortfalls })
    }
}

/// Surrogate covariance per sample followed by `estimator` with the true
/// source count.
pub fn evaluate(params: &ModelParameters, estimator: Estimator, dataset: &[DatasetSample]) -> Result<EvalReport> {
    if let Some(s) = dataset.first() {
        params.check_sensors(s.snapshots.nrows())?;
    }
    let mut preds = Vec::with_capacity(dataset.len());
    for s in dataset {
        let cov = params.surrogate_covariance(&s.snapshots)?;
        preds.push((estimate(estimator, &cov, Some(s.true_thetas.len())), s.true_thetas.clone()));
    }
    EvalReport::from_predictions(preds)
}
