//! Binary dataset files.
//!
//! Layout, all integers `u32` and floats `f64`, little-endian:
//!
//! ```text
//! "SSNDAT1"  N  J
//! per sample:  M  T  θ[0..M]  X as (re, im) pairs, column-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{DoaError, Result};
use crate::signal::DatasetSample;
use crate::{CMatrix, C64};

pub const MAGIC: &[u8; 7] = b"SSNDAT1";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(DoaError::Format(msg.into()))
}

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| DoaError::Format(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_dataset(w: &mut impl Write, samples: &[DatasetSample]) -> Result<()> {
    let n = samples.first().map_or(0, |s| s.snapshots.nrows());
    w.write_all(MAGIC)?;
    put_u32(w, n)?;
    put_u32(w, samples.len())?;
    for (j, s) in samples.iter().enumerate() {
        if s.snapshots.nrows() != n {
            return format_err(format!("sample {j} has {} sensors, expected {n}", s.snapshots.nrows()));
        }
        put_u32(w, s.true_thetas.len())?;
        put_u32(w, s.snapshots.ncols())?;
        for &t in &s.true_thetas {
            w.write_all(&t.to_le_bytes())?;
        }
        // nalgebra storage is column-major already
        for z in s.snapshots.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dataset(r: &mut impl Read) -> Result<Vec<DatasetSample>> {
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return format_err("not a dataset file (bad magic)");
    }
    let n = get_u32(r)?;
    let j = get_u32(r)?;
    let mut samples = Vec::with_capacity(j.min(1 << 16));
    for _ in 0..j {
        let m = get_u32(r)?;
        let t = get_u32(r)?;
        let thetas = (0..m).map(|_| get_f64(r)).collect::<Result<Vec<f64>>>()?;
        let mut data = Vec::with_capacity(n * t);
        for _ in 0..n * t {
            let re = get_f64(r)?;
            let im = get_f64(r)?;
            data.push(C64::new(re, im));
        }
        samples.push(DatasetSample { snapshots: CMatrix::from_vec(n, t, data), true_thetas: thetas });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return format_err("trailing bytes after the last sample");
    }
    Ok(samples)
}

pub fn save_dataset(path: impl AsRef<Path>, samples: &[DatasetSample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&mut w, samples)?;
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetSample>> {
    read_dataset(&mut BufReader::new(File::open(path)?))
}
