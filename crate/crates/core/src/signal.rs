//! Snapshot simulation for narrowband and OFDM broadband sources.
//!
//! Narrowband observations follow `X = A(θ)·S + V`; broadband observations
//! apply the array response per OFDM subcarrier frequency. Complex
//! Gaussian draws are circular with `E|x|² = σ²`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{check_angle, ArrayGeometry};
use crate::error::{domain, Result};
use crate::rng::{rng_from_seed, substream_seed, SimRng};
use crate::{CMatrix, C64};

/// Default minimum separation between randomly drawn DOAs (3°).
pub const DEFAULT_MIN_SEPARATION: f64 = 3.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coherence {
    NonCoherent,
    /// Every source carries the same waveform, so `R_S` has rank one.
    FullyCoherent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    Narrowband,
    Ofdm { subcarriers: usize, bandwidth_hz: f64, sample_rate_hz: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DoaSpec {
    Fixed(Vec<f64>),
    /// Uniform on `[-π/2, π/2)` subject to a minimum pairwise separation.
    UniformRandom { min_separation: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub num_sources: usize,
    pub thetas: DoaSpec,
    pub num_snapshots: usize,
    pub snr_db: f64,
    pub coherence: Coherence,
    pub signal_kind: SignalKind,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    /// `N × T` observations.
    pub snapshots: CMatrix,
    /// Ground-truth DOAs sorted ascending.
    pub true_thetas: Vec<f64>,
}

impl Scenario {
    /// Narrowband, non-coherent scenario with random DOAs on a nominal array.
    pub fn narrowband(n_sensors: usize, num_sources: usize, num_snapshots: usize, snr_db: f64) -> Result<Self> {
        let s = Self {
            geometry: ArrayGeometry::nominal(n_sensors)?,
            num_sources,
            thetas: DoaSpec::UniformRandom { min_separation: DEFAULT_MIN_SEPARATION },
            num_snapshots,
            snr_db,
            coherence: Coherence::NonCoherent,
            signal_kind: SignalKind::Narrowband,
            rng_seed: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_coherence(mut self, coherence: Coherence) -> Self {
        self.coherence = coherence;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_thetas(mut self, thetas: Vec<f64>) -> Self {
        self.num_sources = thetas.len();
        self.thetas = DoaSpec::Fixed(thetas);
        self
    }

    pub fn with_signal_kind(mut self, kind: SignalKind) -> Self {
        self.signal_kind = kind;
        self
    }

    pub fn with_geometry(mut self, geometry: ArrayGeometry) -> Self {
        self.geometry = geometry;
        self
    }

    /// Noise variance `σ_V² = 10^(-SNR/10)`.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.geometry.n_sensors();
        if self.num_sources == 0 || self.num_sources >= n {
            return domain(format!("need 1 <= M < N (M = {}, N = {n})", self.num_sources));
        }
        if self.num_snapshots == 0 {
            return domain("need at least one snapshot");
        }
        if !self.snr_db.is_finite() {
            return domain("SNR must be finite");
        }
        match &self.thetas {
            DoaSpec::Fixed(t) => {
                if t.len() != self.num_sources {
                    return domain(format!("{} angles given for M = {}", t.len(), self.num_sources));
                }
                for &a in t {
                    check_angle(a)?;
                }
            }
            DoaSpec::UniformRandom { min_separation } => {
                if !(*min_separation >= 0.0) || *min_separation * self.num_sources as f64 >= PI {
                    return domain(format!("min separation {min_separation} leaves no room for M sources"));
                }
            }
        }
        if let SignalKind::Ofdm { subcarriers, bandwidth_hz, sample_rate_hz } = self.signal_kind {
            if subcarriers == 0 || !(bandwidth_hz > 0.0) || !(sample_rate_hz > 0.0) {
                return domain("OFDM needs L >= 1, B_f > 0 and f_s > 0");
            }
        }
        Ok(())
    }
}

/// Circular distance between two DOAs on the period-π angle range.
pub fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = a - b;
    (d - PI * (d / PI).round()).abs()
}

/// Draws `m` sorted DOAs uniformly on `[-π/2, π/2)` with every pair at least
/// `min_separation` apart (circularly, since ±π/2 share a steering vector).
pub fn draw_doas(rng: &mut SimRng, m: usize, min_separation: f64) -> Vec<f64> {
    loop {
        let mut t: Vec<f64> = (0..m).map(|_| rng.random_range(-FRAC_PI_2..FRAC_PI_2)).collect();
        let ok = (0..m).all(|i| (i + 1..m).all(|j| wrapped_distance(t[i], t[j]) >= min_separation));
        if ok {
            t.sort_by(f64::total_cmp);
            return t;
        }
    }
}

fn complex_gaussian(rng: &mut SimRng, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

fn resolve_thetas(scenario: &Scenario, rng: &mut SimRng) -> Vec<f64> {
    match &scenario.thetas {
        DoaSpec::Fixed(t) => {
            let mut t = t.clone();
            t.sort_by(f64::total_cmp);
            t
        }
        DoaSpec::UniformRandom { min_separation } => draw_doas(rng, scenario.num_sources, *min_separation),
    }
}

/// Source waveforms `M × T`; coherent sources share one row.
fn source_signals(rng: &mut SimRng, m: usize, t: usize, coherence: Coherence) -> CMatrix {
    match coherence {
        Coherence::NonCoherent => CMatrix::from_fn(m, t, |_, _| complex_gaussian(rng, 1.0)),
        Coherence::FullyCoherent => {
            let base: Vec<C64> = (0..t).map(|_| complex_gaussian(rng, 1.0)).collect();
            CMatrix::from_fn(m, t, |_, j| base[j])
        }
    }
}

fn add_noise(x: &mut CMatrix, rng: &mut SimRng, variance: f64) {
    for e in x.iter_mut() {
        *e += complex_gaussian(rng, variance);
    }
}

/// Narrowband snapshots `X = A(θ)S + V`.
pub fn generate_narrowband(scenario: &Scenario) -> Result<DatasetSample> {
    scenario.validate()?;
    if scenario.signal_kind != SignalKind::Narrowband {
        return domain("generate_narrowband called on a broadband scenario");
    }
    let mut rng = rng_from_seed(scenario.rng_seed);
    let thetas = resolve_thetas(scenario, &mut rng);
    let a = scenario.geometry.steering_matrix(&thetas)?;
    let s = source_signals(&mut rng, scenario.num_sources, scenario.num_snapshots, scenario.coherence);
    let mut x = a * s;
    add_noise(&mut x, &mut rng, scenario.noise_variance());
    Ok(DatasetSample { snapshots: x, true_thetas: thetas })
}

/// One OFDM waveform of `T` samples from `L` subcarrier symbols, normalized to
/// unit average power.
pub fn ofdm_waveform(symbols: &[C64], t: usize, bandwidth_hz: f64, sample_rate_hz: f64) -> Vec<C64> {
    let l = symbols.len();
    let norm = 1.0 / (l as f64).sqrt();
    (1..=t)
        .map(|ti| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, &s) in symbols.iter().enumerate() {
                let phase = 2.0 * PI * (k as f64) * bandwidth_hz * ti as f64 / (l as f64 * sample_rate_hz);
                acc += s * C64::from_polar(1.0, phase);
            }
            acc * norm
        })
        .collect()
}

/// Broadband OFDM snapshots. Each subcarrier `l` sits at `l·B_f/L` Hz and
/// reaches the array with the steering vector of that frequency, so
/// subcarriers above `f_s` keep their true spatial signature after aliasing.
///
/// The element spacing is half the minimal wavelength, `d = c/(2·B_f)`, so with
/// `d = 1` the propagation speed is `c = 2·B_f`.
pub fn generate_ofdm(scenario: &Scenario) -> Result<DatasetSample> {
    scenario.validate()?;
    let SignalKind::Ofdm { subcarriers, bandwidth_hz, sample_rate_hz } = scenario.signal_kind else {
        return domain("generate_ofdm called on a narrowband scenario");
    };
    let t = scenario.num_snapshots;
    if t < 2 {
        return domain("OFDM synthesis needs at least 2 snapshots");
    }
    let m = scenario.num_sources;
    let n = scenario.geometry.n_sensors();
    let mut rng = rng_from_seed(scenario.rng_seed);
    let thetas = resolve_thetas(scenario, &mut rng);

    let draw_symbols = |rng: &mut SimRng| -> Vec<C64> { (0..subcarriers).map(|_| complex_gaussian(rng, 1.0)).collect() };
    let symbols: Vec<Vec<C64>> = match scenario.coherence {
        Coherence::NonCoherent => (0..m).map(|_| draw_symbols(&mut rng)).collect(),
        Coherence::FullyCoherent => vec![draw_symbols(&mut rng); m],
    };

    let c = 2.0 * bandwidth_hz;
    let norm = 1.0 / (subcarriers as f64).sqrt();
    let mut x = CMatrix::zeros(n, t);
    let mut coef = vec![C64::new(0.0, 0.0); n];
    for l in 0..subcarriers {
        let freq = l as f64 * bandwidth_hz / subcarriers as f64;
        let a = if l == 0 {
            CMatrix::from_element(n, m, C64::new(1.0, 0.0))
        } else {
            scenario.geometry.broadband_steering_matrix(2.0 * PI * freq, &thetas, c)?
        };
        for (row, cf) in coef.iter_mut().enumerate() {
            *cf = (0..m).map(|src| a[(row, src)] * symbols[src][l]).sum::<C64>() * norm;
        }
        let step = 2.0 * PI * freq / sample_rate_hz;
        for ti in 0..t {
            let phase = C64::from_polar(1.0, step * (ti + 1) as f64);
            for (row, cf) in coef.iter().enumerate() {
                x[(row, ti)] += cf * phase;
            }
        }
    }
    add_noise(&mut x, &mut rng, scenario.noise_variance());
    Ok(DatasetSample { snapshots: x, true_thetas: thetas })
}

/// Dispatches on the scenario's signal kind.
pub fn generate(scenario: &Scenario) -> Result<DatasetSample> {
    match scenario.signal_kind {
        SignalKind::Narrowband => generate_narrowband(scenario),
        SignalKind::Ofdm { .. } => generate_ofdm(scenario),
    }
}

/// Scenario for sample `index` of a dataset rooted at `template`: an
/// independent seed and, when the array has steering noise, an independent
/// per-sample perturbation.
pub fn sample_scenario(template: &Scenario, index: u64) -> Scenario {
    let mut s = template.clone();
    let seed = substream_seed(template.rng_seed, index);
    s.rng_seed = seed;
    if template.geometry.steering_noise_std() > 0.0 {
        s.geometry = template
            .geometry
            .clone()
            .with_steering_noise(template.geometry.steering_noise_std(), substream_seed(seed, 1))
            .expect("steering noise already validated");
    }
    s
}

/// `count` labelled samples drawn from `template`; deterministic in the seed.
pub fn generate_dataset(template: &Scenario, count: usize) -> Result<Vec<DatasetSample>> {
    generate_mixed_dataset(template, count, &[template.num_sources], &[template.num_snapshots])
}

/// Dataset whose per-sample `M` and `T` are drawn uniformly from the given sets.
pub fn generate_mixed_dataset(
    template: &Scenario,
    count: usize,
    source_counts: &[usize],
    snapshot_counts: &[usize],
) -> Result<Vec<DatasetSample>> {
    if count == 0 {
        return domain("dataset needs at least one sample");
    }
    if source_counts.is_empty() || snapshot_counts.is_empty() {
        return domain("source and snapshot count sets must be nonempty");
    }
    let mut chooser = rng_from_seed(substream_seed(template.rng_seed, u64::MAX));
    (0..count)
        .map(|j| {
            let mut s = sample_scenario(template, j as u64);
            s.num_sources = source_counts[chooser.random_range(0..source_counts.len())];
            s.num_snapshots = snapshot_counts[chooser.random_range(0..snapshot_counts.len())];
            if let DoaSpec::Fixed(t) = &s.thetas {
                if t.len() != s.num_sources {
                    return domain("fixed DOAs conflict with a mixed source count");
                }
            }
            generate(&s)
        })
        .collect()
}

/// Thread-shareable handle for a dataset.
pub type SharedDataset = Arc<Vec<DatasetSample>>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;

    fn base(m: usize, t: usize, snr: f64) -> Scenario {
        Scenario::narrowband(8, m, t, snr).unwrap().with_seed(7)
    }

    #[test]
    fn noiseless_single_broadside_source_repeats_waveform() {
        let s = base(1, 50, 400.0).with_thetas(vec![0.0]);
        let x = generate_narrowband(&s).unwrap().snapshots;
        for row in 1..8 {
            for t in 0..50 {
                assert!((x[(row, t)] - x[(0, t)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn coherent_sources_have_rank_one_covariance() {
        let mut rng = rng_from_seed(3);
        let s = source_signals(&mut rng, 3, 100_000, Coherence::FullyCoherent);
        let rs = &s * s.adjoint() / C64::new(100_000.0, 0.0);
        let sv = singular_values(&rs);
        assert!(sv[1] / sv[0] < 1e-2);
        // analytic R_S is the all-ones matrix
        for e in rs.iter() {
            assert!((e - C64::new(1.0, 0.0)).norm() < 0.02);
        }
    }

    #[test]
    fn noncoherent_source_covariance_tends_to_identity() {
        let t = 40_000;
        let mut rng = rng_from_seed(4);
        let s = source_signals(&mut rng, 2, t, Coherence::NonCoherent);
        let rs = &s * s.adjoint() / C64::new(t as f64, 0.0);
        let tol = 5.0 / (t as f64).sqrt();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((rs[(i, j)] - C64::new(expect, 0.0)).norm() < tol);
            }
        }
    }

    #[test]
    fn snr_calibration_within_fifth_of_db() {
        let s = base(1, 100_000, 10.0).with_thetas(vec![0.4]);
        let x = generate_narrowband(&s).unwrap().snapshots;
        // noise-only estimate: remove the exact signal component by regenerating without noise
        let mut clean = s.clone();
        clean.snr_db = 1e6;
        let xs = generate_narrowband(&clean).unwrap().snapshots;
        let noise = &x - &xs;
        let p_sig = xs.iter().map(|e| e.norm_sqr()).sum::<f64>() / xs.len() as f64;
        let p_noise = noise.iter().map(|e| e.norm_sqr()).sum::<f64>() / noise.len() as f64;
        let measured = 10.0 * (p_sig / p_noise).log10();
        assert!((measured - 10.0).abs() < 0.2, "measured {measured} dB");
    }

    #[test]
    fn ofdm_waveform_has_unit_power() {
        let mut rng = rng_from_seed(9);
        let sym: Vec<C64> = (0..500).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let w = ofdm_waveform(&sym, 2000, 500.0, 200.0);
        let power = w.iter().map(|z| z.norm_sqr()).sum::<f64>() / w.len() as f64;
        assert!((power - 1.0).abs() < 0.2, "power {power}");
        assert!(w.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    fn ofdm_scenario(coherence: Coherence, l: usize, t: usize) -> Scenario {
        base(2, t, 10.0)
            .with_coherence(coherence)
            .with_signal_kind(SignalKind::Ofdm { subcarriers: l, bandwidth_hz: 500.0, sample_rate_hz: 200.0 })
    }

    #[test]
    fn ofdm_requires_a_window() {
        assert!(generate_ofdm(&ofdm_scenario(Coherence::NonCoherent, 10, 1)).is_err());
        assert!(generate_ofdm(&base(2, 10, 10.0)).is_err());
    }

    #[test]
    fn ofdm_coherent_sources_share_waveform() {
        // with a broadside pair the two sources add identically on every sensor
        let mut s = ofdm_scenario(Coherence::FullyCoherent, 50, 64).with_thetas(vec![0.0, 0.0]);
        s.snr_db = 1e6;
        let x = generate_ofdm(&s).unwrap().snapshots;
        for row in 1..8 {
            for t in 0..64 {
                assert!((x[(row, t)] - x[(0, t)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn single_subcarrier_ofdm_matches_narrowband_statistics() {
        // L = 1 puts all energy at DC; per-sensor power should equal the
        // narrowband per-sensor power M + σ² in expectation.
        let trials = 300;
        let mut p_ofdm = 0.0;
        let mut p_nb = 0.0;
        for k in 0..trials {
            let o = ofdm_scenario(Coherence::NonCoherent, 1, 16).with_seed(k);
            let n = base(2, 16, 10.0).with_seed(k + 10_000);
            let xo = generate_ofdm(&o).unwrap().snapshots;
            let xn = generate_narrowband(&n).unwrap().snapshots;
            p_ofdm += xo.iter().map(|e| e.norm_sqr()).sum::<f64>() / xo.len() as f64;
            p_nb += xn.iter().map(|e| e.norm_sqr()).sum::<f64>() / xn.len() as f64;
        }
        p_ofdm /= trials as f64;
        p_nb /= trials as f64;
        assert!((p_ofdm - p_nb).abs() / p_nb < 0.1, "{p_ofdm} vs {p_nb}");
    }

    #[test]
    fn dataset_respects_separation_and_sorting() {
        let s = base(3, 10, 10.0).with_seed(99);
        let data = generate_dataset(&s, 200).unwrap();
        assert_eq!(data.len(), 200);
        for d in &data {
            assert_eq!(d.true_thetas.len(), 3);
            assert_eq!(d.snapshots.ncols(), 10);
            assert!(d.true_thetas.windows(2).all(|w| w[0] <= w[1]));
            for i in 0..3 {
                for j in i + 1..3 {
                    assert!(wrapped_distance(d.true_thetas[i], d.true_thetas[j]) >= DEFAULT_MIN_SEPARATION);
                }
            }
        }
        assert_eq!(data, generate_dataset(&s, 200).unwrap());
    }

    #[test]
    fn mixed_dataset_varies_dimensions() {
        let s = base(2, 10, 10.0).with_seed(5);
        let data = generate_mixed_dataset(&s, 60, &[1, 2, 3], &[4, 20]).unwrap();
        let ms: std::collections::BTreeSet<usize> = data.iter().map(|d| d.true_thetas.len()).collect();
        let ts: std::collections::BTreeSet<usize> = data.iter().map(|d| d.snapshots.ncols()).collect();
        assert_eq!(ms.len(), 3);
        assert_eq!(ts.len(), 2);
    }

    #[test]
    fn invalid_scenarios_rejected() {
        assert!(Scenario::narrowband(8, 8, 10, 0.0).is_err());
        assert!(Scenario::narrowband(8, 0, 10, 0.0).is_err());
        assert!(Scenario::narrowband(8, 2, 0, 0.0).is_err());
        assert!(generate_dataset(&base(2, 10, 0.0), 0).is_err());
    }
}
