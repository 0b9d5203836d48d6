//! Uniform linear array geometry and steering vectors.
//!
//! Element spacing is expressed in units of the nominal half wavelength `d`,
//! so a calibrated array has every gap equal to `1.0` and element `m` of the
//! narrowband steering vector is `exp(-jπ·p_m·sin θ)` with `p_m` the
//! cumulative distance of sensor `m` from sensor 0.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::rng::{mix64, rng_from_seed, substream};
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    n_sensors: usize,
    gap_spacings: Vec<f64>,
    steering_noise_std: f64,
    rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: CVector,
    pub angle: f64,
}

pub(crate) fn check_angle(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() > FRAC_PI_2 + 1e-12 {
        return domain(format!("angle {theta} rad outside [-pi/2, pi/2]"));
    }
    Ok(())
}

impl ArrayGeometry {
    /// Calibrated half-wavelength ULA.
    pub fn nominal(n_sensors: usize) -> Result<Self> {
        Self::with_gaps(vec![1.0; n_sensors.saturating_sub(1)], n_sensors)
    }

    /// Array with explicit adjacent-sensor gaps (units of `d`).
    pub fn with_gaps(gap_spacings: Vec<f64>, n_sensors: usize) -> Result<Self> {
        if n_sensors < 2 {
            return domain(format!("an array needs at least 2 sensors, got {n_sensors}"));
        }
        if gap_spacings.len() != n_sensors - 1 {
            return domain(format!(
                "expected {} gaps for {} sensors, got {}",
                n_sensors - 1,
                n_sensors,
                gap_spacings.len()
            ));
        }
        if let Some(g) = gap_spacings.iter().find(|g| !(**g > 0.0)) {
            return domain(format!("gap spacing must be positive, got {g}"));
        }
        Ok(Self { n_sensors, gap_spacings, steering_noise_std: 0.0, rng_seed: 0 })
    }

    /// Spacing-miscalibrated array: every gap is `1 + δ_m` with
    /// `δ_m ~ U(-eta, eta)` drawn once from `seed`.
    pub fn with_spacing_deviation(n_sensors: usize, eta: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return domain(format!("spacing deviation {eta} must lie in [0, 1)"));
        }
        let mut rng = rng_from_seed(mix64(seed ^ 0x5eed_9a95));
        let gaps = (0..n_sensors.saturating_sub(1))
            .map(|_| if eta > 0.0 { 1.0 + rng.random_range(-eta..eta) } else { 1.0 })
            .collect();
        let mut g = Self::with_gaps(gaps, n_sensors)?;
        g.rng_seed = seed;
        Ok(g)
    }

    /// Adds i.i.d. complex Gaussian perturbation of std `sigma` to every
    /// steering vector entry. The perturbation is a deterministic function of
    /// `(seed, θ)`.
    pub fn with_steering_noise(mut self, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return domain(format!("steering noise std must be nonnegative, got {sigma}"));
        }
        self.steering_noise_std = sigma;
        self.rng_seed = seed;
        Ok(self)
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn gap_spacings(&self) -> &[f64] {
        &self.gap_spacings
    }

    pub fn steering_noise_std(&self) -> f64 {
        self.steering_noise_std
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn is_nominal(&self) -> bool {
        self.steering_noise_std == 0.0 && self.gap_spacings.iter().all(|&g| g == 1.0)
    }

    /// The calibrated manifold an estimator assumes for this array.
    pub fn nominal_counterpart(&self) -> Self {
        Self::nominal(self.n_sensors).expect("sensor count already validated")
    }

    /// Nominal subarray of `size` leading sensors (spatial smoothing manifold).
    pub fn subarray(&self, size: usize) -> Result<Self> {
        if size > self.n_sensors {
            return domain(format!("subarray size {size} exceeds {} sensors", self.n_sensors));
        }
        Self::nominal(size)
    }

    /// Sensor positions in units of `d`, starting at 0.
    pub fn positions(&self) -> Vec<f64> {
        let mut pos = Vec::with_capacity(self.n_sensors);
        let mut acc = 0.0;
        pos.push(0.0);
        for g in &self.gap_spacings {
            acc += g;
            pos.push(acc);
        }
        pos
    }

    fn phase_vector(&self, phase_per_unit: f64) -> CVector {
        let pos = self.positions();
        CVector::from_iterator(
            self.n_sensors,
            pos.iter().map(|p| C64::from_polar(1.0, -phase_per_unit * p)),
        )
    }

    fn add_steering_noise(&self, v: &mut CVector, theta: f64, salt: u64) {
        if self.steering_noise_std == 0.0 {
            return;
        }
        let mut rng = substream(self.rng_seed ^ salt, theta.to_bits());
        let s = self.steering_noise_std / std::f64::consts::SQRT_2;
        for e in v.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *e += C64::new(re * s, im * s);
        }
    }

    /// Narrowband steering vector `a(θ)`.
    pub fn steering_vector(&self, theta: f64) -> Result<SteeringVector> {
        check_angle(theta)?;
        let mut entries = self.phase_vector(PI * theta.sin());
        self.add_steering_noise(&mut entries, theta, 0);
        Ok(SteeringVector { entries, angle: theta })
    }

    /// Broadband steering vector at angular frequency `omega` for propagation
    /// speed `c` (in units of `d` per second): entry `m` is
    /// `exp(-j·ω·p_m/c·sin θ)`.
    pub fn broadband_steering_vector(&self, omega: f64, theta: f64, c: f64) -> Result<SteeringVector> {
        if !(omega > 0.0) {
            return domain(format!("angular frequency must be positive, got {omega}"));
        }
        if !(c > 0.0) {
            return domain(format!("propagation speed must be positive, got {c}"));
        }
        check_angle(theta)?;
        let mut entries = self.phase_vector(omega / c * theta.sin());
        self.add_steering_noise(&mut entries, theta, omega.to_bits());
        Ok(SteeringVector { entries, angle: theta })
    }

    /// Steering matrix `A(θ)` with one column per angle; requires `1 <= M < N`.
    pub fn steering_matrix(&self, thetas: &[f64]) -> Result<CMatrix> {
        if thetas.is_empty() || thetas.len() >= self.n_sensors {
            return domain(format!(
                "steering matrix needs 1 <= M < N (M = {}, N = {})",
                thetas.len(),
                self.n_sensors
            ));
        }
        let mut a = CMatrix::zeros(self.n_sensors, thetas.len());
        for (k, &t) in thetas.iter().enumerate() {
            a.set_column(k, &self.steering_vector(t)?.entries);
        }
        Ok(a)
    }

    /// Broadband steering matrix at angular frequency `omega`.
    pub fn broadband_steering_matrix(&self, omega: f64, thetas: &[f64], c: f64) -> Result<CMatrix> {
        let mut a = CMatrix::zeros(self.n_sensors, thetas.len());
        for (k, &t) in thetas.iter().enumerate() {
            a.set_column(k, &self.broadband_steering_vector(omega, t, c)?.entries);
        }
        Ok(a)
    }
}
