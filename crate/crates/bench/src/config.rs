//! Run configuration loaded from TOML.
//!
//! ```toml
//! seed = 7
//! trials = 1000
//! estimators = ["rootmusic", "music"]
//! preprocessing = ["none", "sps"]
//!
//! [scenario]
//! n_sensors = 8
//! num_sources = 2
//! num_snapshots = 100
//! snr_db = 10.0
//! coherent = true
//!
//! [sweep]
//! axis = "snr"
//! values = [-5.0, 0.0, 5.0]
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use doa_core::array::ArrayGeometry;
use doa_core::signal::{Coherence, DoaSpec, Scenario, SignalKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subspacenet::eval::Estimator;
use subspacenet::trainer::Hyperparameters;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub n_sensors: usize,
    pub num_sources: usize,
    pub num_snapshots: usize,
    pub snr_db: f64,
    pub coherent: bool,
    /// `"narrowband"` or `"ofdm"`.
    pub signal: String,
    pub subcarriers: usize,
    pub bandwidth_hz: f64,
    pub sample_rate_hz: f64,
    /// Maximum relative spacing error of the true array.
    pub eta: f64,
    /// Steering-vector noise standard deviation of the true array.
    pub sigma_sv: f64,
    pub min_separation_deg: f64,
    /// Fixed DOAs in degrees; random when empty.
    pub thetas_deg: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_sensors: 8,
            num_sources: 2,
            num_snapshots: 100,
            snr_db: 10.0,
            coherent: false,
            signal: "narrowband".into(),
            subcarriers: 500,
            bandwidth_hz: 500.0,
            sample_rate_hz: 200.0,
            eta: 0.0,
            sigma_sv: 0.0,
            min_separation_deg: 3.0,
            thetas_deg: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Snr,
    Snapshots,
    Eta,
    SigmaSv,
    Fs,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr",
            SweepAxis::Snapshots => "snapshots",
            SweepAxis::Eta => "eta",
            SweepAxis::SigmaSv => "sigma_sv",
            SweepAxis::Fs => "fs",
        }
    }

    /// Values used when a sweep lists none.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Snr => (-5..=10).map(f64::from).collect(),
            SweepAxis::Snapshots => vec![2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0],
            SweepAxis::Eta => (1..=6).map(|k| 0.0125 * k as f64).collect(),
            SweepAxis::SigmaSv => (1..=6).map(|k| (0.125 * k as f64).sqrt()).collect(),
            SweepAxis::Fs => vec![50.0, 100.0, 200.0, 500.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    /// Axis defaults when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SweepConfig {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Self {
        Self { axis, values: Some(values) }
    }

    pub fn resolved_values(&self) -> Vec<f64> {
        self.values.clone().unwrap_or_else(|| self.axis.default_values())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epsilon: f64,
    pub lags: usize,
    pub m_known: bool,
    pub val_fraction: f64,
    /// Draw each sample's source count from this set instead of the
    /// scenario's.
    pub source_counts: Vec<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let hp = Hyperparameters::default();
        Self {
            samples: 5000,
            epochs: hp.max_epochs,
            learning_rate: hp.learning_rate,
            batch_size: hp.batch_size,
            epsilon: hp.epsilon,
            lags: hp.lags,
            m_known: hp.m_known,
            val_fraction: hp.val_fraction,
            source_counts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preprocessing {
    None,
    Sps,
    Fb,
    /// Surrogate covariance from a trained model.
    Ssn,
}

impl Preprocessing {
    pub const ALL: [Preprocessing; 4] = [Preprocessing::None, Preprocessing::Sps, Preprocessing::Fb, Preprocessing::Ssn];

    pub fn name(self) -> &'static str {
        match self {
            Preprocessing::None => "none",
            Preprocessing::Sps => "sps",
            Preprocessing::Fb => "fb",
            Preprocessing::Ssn => "ssn",
        }
    }
}

impl fmt::Display for Preprocessing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preprocessing {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Preprocessing::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown preprocessing '{s}' (expected none, sps, fb or ssn)")))
    }
}

/// A covariance-based estimator, or binned broadband MUSIC on the raw
/// snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Covariance(Estimator),
    BroadbandMusic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Covariance(e) => e.name(),
            Method::BroadbandMusic => "bb-music",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "bb-music" {
            return Ok(Method::BroadbandMusic);
        }
        s.parse::<Estimator>().map(Method::Covariance).map_err(|e| BenchError::Config(format!("{e}; or bb-music")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub estimators: Vec<String>,
    pub preprocessing: Vec<String>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Subcarrier groups for broadband MUSIC.
    pub num_bins: usize,
    /// Spatial smoothing subarray size; `⌊N/2⌋ + 1` when unset.
    pub sps_subarray: Option<usize>,
    pub scenario: ScenarioConfig,
    pub sweep: Option<SweepConfig>,
    pub training: TrainingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 1000,
            estimators: vec!["rootmusic".into()],
            preprocessing: vec!["none".into()],
            checkpoint: None,
            out_dir: PathBuf::from("out"),
            num_bins: doa_core::estimators::DEFAULT_NUM_BINS,
            sps_subarray: None,
            scenario: ScenarioConfig::default(),
            sweep: None,
            training: TrainingConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses without validating.
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Config(format!("invalid config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg = Self::parse_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file without validating it, so command-line overrides
    /// can still fill in missing pieces.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(BenchError::Config("trials must be at least 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.as_ref().is_some_and(Vec::is_empty) {
                return Err(BenchError::Config("sweep values must be nonempty".into()));
            }
        }
        if self.estimators.is_empty() || self.preprocessing.is_empty() {
            return Err(BenchError::Config("estimator and preprocessing lists must be nonempty".into()));
        }
        self.methods()?;
        let pre = self.preprocessings()?;
        if pre.contains(&Preprocessing::Ssn) && self.checkpoint.is_none() {
            return Err(BenchError::Config("preprocessing 'ssn' needs a checkpoint".into()));
        }
        if let Some(l) = self.sps_subarray {
            if l <= self.scenario.num_sources || l > self.scenario.n_sensors {
                return Err(BenchError::Config(format!("sps_subarray {l} must exceed the source count and not exceed N")));
            }
        }
        if self.scenario.signal != "narrowband" && self.scenario.signal != "ofdm" {
            return Err(BenchError::Config(format!("unknown signal '{}' (expected narrowband or ofdm)", self.scenario.signal)));
        }
        self.scenario_at(None)?;
        for v in self.sweep_values() {
            self.scenario_at(v)?;
        }
        Ok(())
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        self.estimators.iter().map(|s| s.parse()).collect()
    }

    pub fn preprocessings(&self) -> Result<Vec<Preprocessing>> {
        self.preprocessing.iter().map(|s| s.parse()).collect()
    }

    /// Sweep values, or a single `None` without a sweep.
    pub fn sweep_values(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.resolved_values().into_iter().map(Some).collect(),
            None => vec![None],
        }
    }

    /// Simulation scenario with the sweep axis set to `value`.
    pub fn scenario_at(&self, value: Option<f64>) -> Result<Scenario> {
        let mut sc = self.scenario.clone();
        if let (Some(v), Some(sweep)) = (value, &self.sweep) {
            match sweep.axis {
                SweepAxis::Snr => sc.snr_db = v,
                SweepAxis::Snapshots => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(BenchError::Config(format!("snapshot count {v} is not a positive integer")));
                    }
                    sc.num_snapshots = v as usize;
                }
                SweepAxis::Eta => sc.eta = v,
                SweepAxis::SigmaSv => sc.sigma_sv = v,
                SweepAxis::Fs => {
                    if v < 2.0 || v.fract() != 0.0 {
                        return Err(BenchError::Config(format!("sample rate {v} must be an integer of at least 2 Hz")));
                    }
                    // one second of observation
                    sc.sample_rate_hz = v;
                    sc.num_snapshots = v as usize;
                }
            }
        }
        let mut geometry = if sc.eta > 0.0 {
            ArrayGeometry::with_spacing_deviation(sc.n_sensors, sc.eta, self.seed)?
        } else {
            ArrayGeometry::nominal(sc.n_sensors)?
        };
        if sc.sigma_sv > 0.0 {
            geometry = geometry.with_steering_noise(sc.sigma_sv, self.seed)?;
        }
        let mut s = Scenario::narrowband(sc.n_sensors, sc.num_sources, sc.num_snapshots, sc.snr_db)?
            .with_geometry(geometry)
            .with_coherence(if sc.coherent { Coherence::FullyCoherent } else { Coherence::NonCoherent })
            .with_seed(self.seed);
        s.thetas = if sc.thetas_deg.is_empty() {
            DoaSpec::UniformRandom { min_separation: sc.min_separation_deg * PI / 180.0 }
        } else {
            DoaSpec::Fixed(sc.thetas_deg.iter().map(|d| d.to_radians()).collect())
        };
        if sc.signal == "ofdm" {
            s = s.with_signal_kind(SignalKind::Ofdm {
                subcarriers: sc.subcarriers,
                bandwidth_hz: sc.bandwidth_hz,
                sample_rate_hz: sc.sample_rate_hz,
            });
        }
        s.validate()?;
        Ok(s)
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        let t = &self.training;
        Hyperparameters {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.epochs,
            epsilon: t.epsilon,
            lags: t.lags,
            seed: self.seed,
            m_known: t.m_known,
            val_fraction: t.val_fraction,
        }
    }
}
