//! Single-trial diagnostic exports: eigenvalue profiles, MUSIC spectra, root
//! maps and MVDR beampatterns.

use std::fs;
use std::path::Path;

use doa_core::array::ArrayGeometry;
use doa_core::covariance::CovarianceLike;
use doa_core::estimators::{
    decompose, music_spectrum, mvdr_beampattern, rootmusic_doa, rootset_csv, spectrum_csv, DEFAULT_GRID_RESOLUTION,
};
use doa_core::linalg::hermitian_eigh;
use doa_core::signal::{generate, sample_scenario, DatasetSample};
use serde::Serialize;
use subspacenet::model::ModelParameters;

use crate::config::{Preprocessing, RunConfig};
use crate::error::{io_context, Result};
use crate::sweep::{preprocess, trial_scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Eigenvalues,
    Spectrum,
    Beampattern,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub kind: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub true_thetas: Vec<f64>,
    pub files: Vec<ManifestEntry>,
}

/// Eigenvalues in descending order, divided by the largest.
pub fn normalized_eigenvalues(cov: &CovarianceLike) -> Vec<f64> {
    let (vals, _) = hermitian_eigh(&cov.matrix);
    let top = vals[0];
    vals.iter().map(|v| if top > 0.0 { v / top } else { *v }).collect()
}

/// The trial diagnostics are computed on: trial 0 at the first sweep value.
pub fn diagnostic_sample(config: &RunConfig) -> Result<DatasetSample> {
    let value = config.sweep_values()[0];
    let template = trial_scenario(config, value)?;
    Ok(generate(&sample_scenario(&template, 0))?)
}

/// Columns `index,empirical,sps,surrogate`; shorter profiles leave cells
/// empty and the surrogate column is omitted without a model.
pub fn eigenvalue_csv(sample: &DatasetSample, model: Option<&ModelParameters>, subarray: Option<usize>) -> Result<String> {
    let mut cols = vec![
        normalized_eigenvalues(&preprocess(Preprocessing::None, &sample.snapshots, None, None)?),
        normalized_eigenvalues(&preprocess(Preprocessing::Sps, &sample.snapshots, None, subarray)?),
    ];
    let mut header = String::from("index,empirical,sps");
    if let Some(m) = model {
        cols.push(normalized_eigenvalues(&m.surrogate_covariance(&sample.snapshots)?));
        header.push_str(",surrogate");
    }
    let mut s = header + "\n";
    for i in 0..cols[0].len() {
        s.push_str(&(i + 1).to_string());
        for c in &cols {
            match c.get(i) {
                Some(v) => s.push_str(&format!(",{v:.12e}")),
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    Ok(s)
}

fn write(dir: &Path, name: &str, kind: &str, body: &str, hash: &str, files: &mut Vec<ManifestEntry>) -> Result<()> {
    io_context(fs::write(dir.join(name), body), || format!("cannot write {name}"))?;
    files.push(ManifestEntry { file: name.into(), kind: kind.into(), config_hash: hash.into() });
    Ok(())
}

/// Writes the requested diagnostics for the configured preprocessing list and
/// a `manifest.json` naming every file.
pub fn emit_diagnostics(config: &RunConfig, model: Option<&ModelParameters>, kinds: &[DiagnosticKind], dir: &Path) -> Result<Manifest> {
    config.validate()?;
    io_context(fs::create_dir_all(dir), || format!("cannot create {}", dir.display()))?;
    let hash = config.hash();
    let sample = diagnostic_sample(config)?;
    let m = sample.true_thetas.len();
    let mut files = Vec::new();
    if kinds.contains(&DiagnosticKind::Eigenvalues) {
        write(dir, "eigvals.csv", "eigenvalues", &eigenvalue_csv(&sample, model, config.sps_subarray)?, &hash, &mut files)?;
    }
    for pre in config.preprocessings()? {
        if pre == Preprocessing::Ssn && model.is_none() {
            continue;
        }
        let cov = preprocess(pre, &sample.snapshots, model, config.sps_subarray)?;
        let geometry = ArrayGeometry::nominal(cov.dim())?;
        if kinds.contains(&DiagnosticKind::Spectrum) {
            let dec = decompose(&cov, Some(m))?;
            let spec = music_spectrum(&dec, &geometry, DEFAULT_GRID_RESOLUTION)?.normalized();
            write(dir, &format!("spectrum_{pre}.csv"), "music_spectrum", &spectrum_csv(&spec), &hash, &mut files)?;
            let (_, roots) = rootmusic_doa(&dec, m)?;
            write(dir, &format!("roots_{pre}.csv"), "root_map", &rootset_csv(&roots), &hash, &mut files)?;
        }
        if kinds.contains(&DiagnosticKind::Beampattern) {
            let pattern = mvdr_beampattern(&cov, &geometry, DEFAULT_GRID_RESOLUTION)?.normalized();
            write(dir, &format!("beampattern_{pre}.csv"), "mvdr_beampattern", &spectrum_csv(&pattern), &hash, &mut files)?;
        }
    }
    let manifest = Manifest { config_hash: hash, seed: config.seed, true_thetas: sample.true_thetas.clone(), files };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    io_context(fs::write(dir.join("manifest.json"), json), || "cannot write manifest.json".into())?;
    Ok(manifest)
}
