//! Autocorrelation features fed to the network.

use doa_core::covariance::lagged_autocorrelation;
use doa_core::{CMatrix, DoaError, Result};
use ssn_autodiff::Tensor;

/// Stacked lagged autocorrelations `[2(τ+1), N, N]` with channels
/// `re(0), im(0), re(1), im(1), ...` and `τ = min(tau_max_cfg, T-1)`.
pub fn extract_features(x: &CMatrix, tau_max_cfg: usize) -> Result<Tensor> {
    let (n, t) = x.shape();
    if t == 0 {
        return Err(DoaError::Domain("features need at least one snapshot".into()));
    }
    let tau = tau_max_cfg.min(t - 1);
    let auto = lagged_autocorrelation(x, tau)?;
    let plane = n * n;
    let mut data = vec![0.0; 2 * (tau + 1) * plane];
    for (lag, r) in auto.lags.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                data[2 * lag * plane + i * n + j] = r[(i, j)].re;
                data[(2 * lag + 1) * plane + i * n + j] = r[(i, j)].im;
            }
        }
    }
    Ok(Tensor::new(&[2 * (tau + 1), n, n], data))
}

/// Network input `[lags, 2N, N]`: lag `k` occupies channel `k` with its real
/// part in the top `N` rows and imaginary part below. Lags beyond `T-1` are
/// zero. The tensor is scaled by `N/trace(R[0])`, so the zero-lag diagonal
/// averages one.
pub fn network_input(x: &CMatrix, lags: usize) -> Result<Tensor> {
    assert!(lags >= 1, "need at least one lag");
    let n = x.nrows();
    let feats = extract_features(x, lags - 1)?;
    let avail = feats.shape()[0] / 2;
    let plane = n * n;
    let src = feats.data();
    let trace: f64 = (0..n).map(|i| src[i * n + i]).sum();
    let scale = if trace > 0.0 { n as f64 / trace } else { 1.0 };
    let mut data = vec![0.0; lags * 2 * plane];
    for lag in 0..avail {
        let dst = &mut data[lag * 2 * plane..(lag + 1) * 2 * plane];
        for (d, s) in dst.iter_mut().zip(&src[2 * lag * plane..(2 * lag + 2) * plane]) {
            *d = s * scale;
        }
    }
    Ok(Tensor::new(&[lags, 2 * n, n], data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use doa_core::signal::{generate, Scenario};

    fn snapshots(t: usize) -> CMatrix {
        generate(&Scenario::narrowband(8, 2, t, 10.0).unwrap().with_seed(t as u64)).unwrap().snapshots
    }

    #[test]
    fn shapes_follow_snapshot_count() {
        assert_eq!(extract_features(&snapshots(100), 8).unwrap().shape(), &[18, 8, 8]);
        let one = extract_features(&snapshots(1), 8).unwrap();
        assert_eq!(one.shape(), &[2, 8, 8]);
        for i in 0..8 {
            assert_eq!(one.data()[64 + i * 8 + i], 0.0);
            for j in 0..8 {
                assert!((one.data()[64 + i * 8 + j] + one.data()[64 + j * 8 + i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn lag_zero_channels_round_trip() {
        let x = snapshots(40);
        let f = extract_features(&x, 8).unwrap();
        let r = &lagged_autocorrelation(&x, 0).unwrap().lags[0];
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(f.data()[i * 8 + j], r[(i, j)].re);
                assert_eq!(f.data()[64 + i * 8 + j], r[(i, j)].im);
            }
        }
    }

    #[test]
    fn network_input_is_padded_and_normalized() {
        for t in [2, 5, 100] {
            let inp = network_input(&snapshots(t), 8).unwrap();
            assert_eq!(inp.shape(), &[8, 16, 8]);
            let trace: f64 = (0..8).map(|i| inp.data()[i * 8 + i]).sum();
            assert!((trace - 8.0).abs() < 1e-12);
            let filled = t.min(8);
            assert!(inp.data()[filled * 128..].iter().all(|v| *v == 0.0));
        }
    }
}
