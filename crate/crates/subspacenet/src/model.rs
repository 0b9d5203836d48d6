//! The convolutional autoencoder producing a surrogate covariance.

use doa_core::covariance::{CovarianceLike, Provenance};
use doa_core::{CMatrix, DoaError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssn_autodiff::{decode_matrix, Tape, Tensor, Var};

use crate::features::network_input;

pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_LAGS: usize = 8;
pub const KERNEL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Deconv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
}

impl LayerSpec {
    pub fn weight_shape(&self) -> [usize; 4] {
        let k = self.kernel;
        match self.kind {
            LayerKind::Conv => [self.out_channels, self.in_channels, k, k],
            LayerKind::Deconv => [self.in_channels, self.out_channels, k, k],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight_shape().iter().product::<usize>() + self.out_channels
    }
}

/// Encoder widths 16/32/64 and decoder widths 32/16/1; every layer but the
/// last is followed by an anti-rectifier, which doubles the channel count.
pub fn default_layers(lags: usize) -> Vec<LayerSpec> {
    let spec = |kind, in_channels, out_channels| LayerSpec { kind, in_channels, out_channels, kernel: KERNEL };
    vec![
        spec(LayerKind::Conv, lags, 16),
        spec(LayerKind::Conv, 32, 32),
        spec(LayerKind::Conv, 64, 64),
        spec(LayerKind::Deconv, 128, 32),
        spec(LayerKind::Deconv, 64, 16),
        spec(LayerKind::Deconv, 32, 1),
    ]
}

/// Training history stored alongside the weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub n_sensors: usize,
    /// Number of autocorrelation lags fed to the network.
    pub lags: usize,
    pub epsilon: f64,
    pub layers: Vec<LayerSpec>,
    /// Weight then bias for each layer, in layer order.
    pub weights: Vec<Tensor>,
    pub meta: TrainingMeta,
}

impl ModelParameters {
    /// Fresh parameters with weights and biases uniform on
    /// `±1/sqrt(in_channels·k²)`.
    pub fn init(n_sensors: usize, lags: usize, epsilon: f64, seed: u64) -> Result<Self> {
        if n_sensors < 2 || lags < 1 {
            return Err(DoaError::Domain(format!("invalid model size N = {n_sensors}, lags = {lags}")));
        }
        if !(epsilon > 0.0) {
            return Err(DoaError::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        let layers = default_layers(lags);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(2 * layers.len());
        for l in &layers {
            let bound = 1.0 / ((l.in_channels * l.kernel * l.kernel) as f64).sqrt();
            let shape = l.weight_shape();
            let n: usize = shape.iter().product();
            weights.push(Tensor::new(&shape, (0..n).map(|_| rng.random_range(-bound..bound)).collect()));
            weights.push(Tensor::new(&[l.out_channels], (0..l.out_channels).map(|_| rng.random_range(-bound..bound)).collect()));
        }
        Ok(Self { n_sensors, lags, epsilon, layers, weights, meta: TrainingMeta::default() })
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Tensor::len).sum()
    }

    /// Errors unless the model was built for `n` sensors.
    pub fn check_sensors(&self, n: usize) -> Result<()> {
        if self.n_sensors != n {
            return Err(DoaError::Domain(format!(
                "model expects N = {} sensors but the data has N = {n}",
                self.n_sensors
            )));
        }
        Ok(())
    }

    /// Surrogate covariance `K·Kᴴ + εI` on `tape` from a network input
    /// `[lags, 2N, N]`. `params` holds one variable per weight tensor.
    pub fn forward<'t>(&self, params: &[Var<'t>], input: Var<'t>) -> Result<Var<'t>> {
        let n = self.n_sensors;
        let expect = [self.lags, 2 * n, n];
        if input.shape() != expect {
            return Err(DoaError::Domain(format!("network input shape {:?}, expected {expect:?}", input.shape())));
        }
        assert_eq!(params.len(), self.weights.len(), "parameter variable count mismatch");
        let last = self.layers.len() - 1;
        let mut h = input;
        for (i, layer) in self.layers.iter().enumerate() {
            let (w, b) = (params[2 * i], params[2 * i + 1]);
            h = match layer.kind {
                LayerKind::Conv => h.conv2d(w, b),
                LayerKind::Deconv => h.deconv2d(w, b),
            };
            if i != last {
                h = h.arelu();
            }
        }
        if h.shape() != [1, 2 * n, n] {
            return Err(DoaError::Domain(format!("network output shape {:?}, expected [1, {}, {n}]", h.shape(), 2 * n)));
        }
        Ok(h.reshape(&[2, n, n]).hermitian_gram(self.epsilon))
    }

    /// Surrogate covariance for a snapshot matrix, without gradients.
    pub fn surrogate_covariance(&self, x: &CMatrix) -> Result<CovarianceLike> {
        self.check_sensors(x.nrows())?;
        let tape = Tape::new();
        let params: Vec<Var<'_>> = self.weights.iter().map(|w| tape.constant(w.clone())).collect();
        let input = tape.constant(network_input(x, self.lags)?);
        let r = self.forward(&params, input)?;
        Ok(CovarianceLike::new(decode_matrix(&r.value()), Provenance::Surrogate))
    }
}
