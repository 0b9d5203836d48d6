//! Binary checkpoint files.
//!
//! Layout, little-endian throughout: magic `SSNCKPT1`, `u32` version, `u32`
//! N, `u32` lag count, `f64` ε, `u32` layer count and per layer `u8` kind
//! (0 conv, 1 deconv) with `u32` in/out channels and kernel size. Training
//! metadata follows as `u32` epochs and two length-prefixed `f64` loss
//! histories. The weight and bias blobs come last in layer order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use doa_core::{DoaError, Result};
use ssn_autodiff::Tensor;

use crate::model::{LayerKind, LayerSpec, ModelParameters, TrainingMeta};

pub const MAGIC: &[u8; 8] = b"SSNCKPT1";
pub const VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| DoaError::Format(format!("value {v} does not fit in u32")))?;
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64s(w: &mut impl Write, vals: &[f64]) -> Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(DoaError::Format(format!("checkpoint truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn write_checkpoint(w: &mut impl Write, p: &ModelParameters) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION as usize)?;
    put_u32(w, p.n_sensors)?;
    put_u32(w, p.lags)?;
    put_f64s(w, &[p.epsilon])?;
    put_u32(w, p.layers.len())?;
    for l in &p.layers {
        w.write_all(&[match l.kind {
            LayerKind::Conv => 0,
            LayerKind::Deconv => 1,
        }])?;
        put_u32(w, l.in_channels)?;
        put_u32(w, l.out_channels)?;
        put_u32(w, l.kernel)?;
    }
    put_u32(w, p.meta.epochs)?;
    put_u32(w, p.meta.train_loss.len())?;
    put_f64s(w, &p.meta.train_loss)?;
    put_u32(w, p.meta.val_loss.len())?;
    put_f64s(w, &p.meta.val_loss)?;
    for t in &p.weights {
        put_f64s(w, t.data())?;
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<ModelParameters> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut rd = Reader { bytes: &bytes, pos: 0 };
    if rd.take(8)? != MAGIC {
        return Err(DoaError::Format("not a checkpoint file (bad magic)".into()));
    }
    let version = rd.u32()?;
    if version != VERSION as usize {
        return Err(DoaError::Format(format!("unsupported checkpoint version {version}, expected {VERSION}")));
    }
    let n_sensors = rd.u32()?;
    let lags = rd.u32()?;
    let epsilon = rd.f64()?;
    let count = rd.u32()?;
    let mut layers = Vec::with_capacity(count.min(64));
    for i in 0..count {
        let kind = match rd.u8()? {
            0 => LayerKind::Conv,
            1 => LayerKind::Deconv,
            k => return Err(DoaError::Format(format!("layer {i}: unknown kind {k}"))),
        };
        layers.push(LayerSpec { kind, in_channels: rd.u32()?, out_channels: rd.u32()?, kernel: rd.u32()? });
    }
    let epochs = rd.u32()?;
    let n = rd.u32()?;
    let train_loss = rd.f64s(n)?;
    let n = rd.u32()?;
    let val_loss = rd.f64s(n)?;
    let mut weights = Vec::with_capacity(2 * layers.len());
    for l in &layers {
        let shape = l.weight_shape();
        weights.push(Tensor::new(&shape, rd.f64s(shape.iter().product())?));
        weights.push(Tensor::new(&[l.out_channels], rd.f64s(l.out_channels)?));
    }
    if rd.pos != bytes.len() {
        return Err(DoaError::Format(format!("{} trailing bytes after checkpoint", bytes.len() - rd.pos)));
    }
    let p = ModelParameters { n_sensors, lags, epsilon, layers, weights, meta: TrainingMeta { epochs, train_loss, val_loss } };
    validate(&p)?;
    Ok(p)
}

/// Checks that the layer table chains into a network for the stored `N`.
fn validate(p: &ModelParameters) -> Result<()> {
    if !(p.epsilon > 0.0) {
        return Err(DoaError::Format(format!("checkpoint epsilon {} is not positive", p.epsilon)));
    }
    let Some(first) = p.layers.first() else {
        return Err(DoaError::Format("checkpoint has no layers".into()));
    };
    if first.in_channels != p.lags {
        return Err(DoaError::Format(format!(
            "first layer takes {} channels but the checkpoint stores {} lags",
            first.in_channels, p.lags
        )));
    }
    let last = p.layers.len() - 1;
    let (mut h, mut w) = (2 * p.n_sensors as i64, p.n_sensors as i64);
    for (i, pair) in p.layers.windows(2).enumerate() {
        if pair[1].in_channels != 2 * pair[0].out_channels {
            return Err(DoaError::Format(format!("layer {} input width does not match layer {i}", i + 1)));
        }
    }
    for l in &p.layers {
        let k = l.kernel as i64 - 1;
        match l.kind {
            LayerKind::Conv => (h, w) = (h - k, w - k),
            LayerKind::Deconv => (h, w) = (h + k, w + k),
        }
        if h < 1 || w < 1 {
            return Err(DoaError::Format("layer table shrinks the input below one pixel".into()));
        }
    }
    if p.layers[last].out_channels != 1 || h != 2 * p.n_sensors as i64 || w != p.n_sensors as i64 {
        return Err(DoaError::Format(format!("layer table does not map back to a 2N x N output for N = {}", p.n_sensors)));
    }
    Ok(())
}

pub fn save_checkpoint(p: &ModelParameters, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, p)?;
    Ok(fs::write(path, buf)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParameters> {
    read_checkpoint(&mut fs::File::open(path)?)
}

/// Loads a checkpoint and checks it was trained for `n_sensors`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, n_sensors: usize) -> Result<ModelParameters> {
    let p = load_checkpoint(path)?;
    p.check_sensors(n_sensors)?;
    Ok(p)
}
