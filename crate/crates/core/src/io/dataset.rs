//! ZCD1 channel-dataset files.
//!
//! Layout (all little-endian):
//!
//! ```text
//! bytes 0..4    magic "ZCD1"
//! bytes 4..8    format version, u32 (currently 1)
//! bytes 8..12   N_t, u32           antennas
//! bytes 12..16  K, u32             subcarriers
//! bytes 16..20  U, u32             sample count
//! per sample (24 + 8 N_t K bytes):
//!   position x, y, z as f64
//!   channel entries subcarrier-major — for k = 0..K-1, for n = 0..N_t-1:
//!     real as f32, imaginary as f32
//! ```
//!
//! Total length is exactly `20 + U (24 + 8 N_t K)`; readers verify this
//! arithmetic (in wide integers) against the actual byte count before
//! allocating anything sample-sized, so hostile headers cannot trigger
//! huge allocations.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::ChannelSample;

use super::{put_f32, put_f64, put_u32, Cursor};

pub const MAGIC: &[u8; 4] = b"ZCD1";
pub const VERSION: u32 = 1;

const HEADER_LEN: u64 = 20;

fn sample_len(n_t: u64, k: u64) -> u64 {
    24 + 8 * n_t * k
}

/// Serializes a dataset to ZCD1 bytes.
pub fn dataset_to_bytes(samples: &[ChannelSample]) -> Result<Vec<u8>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::data("cannot write an empty dataset"))?;
    let (n_t, k) = first.channel.dim();
    if n_t == 0 || k == 0 {
        return Err(Error::data("dataset channels must be non-empty matrices"));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.channel.dim() != (n_t, k) {
            return Err(Error::data(format!(
                "sample {i} has shape {:?}, expected ({n_t}, {k})",
                s.channel.dim()
            )));
        }
    }
    let to_u32 = |v: usize, what: &str| -> Result<u32> {
        u32::try_from(v).map_err(|_| Error::data(format!("{what} {v} exceeds format limit")))
    };
    let n_t32 = to_u32(n_t, "antenna count")?;
    let k32 = to_u32(k, "subcarrier count")?;
    let u32_count = to_u32(samples.len(), "sample count")?;

    let total = HEADER_LEN + samples.len() as u64 * sample_len(n_t as u64, k as u64);
    let mut out = Vec::with_capacity(total as usize);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, n_t32);
    put_u32(&mut out, k32);
    put_u32(&mut out, u32_count);
    for s in samples {
        for &c in &s.position {
            put_f64(&mut out, c);
        }
        for ki in 0..k {
            for ni in 0..n_t {
                let z = s.channel[(ni, ki)];
                put_f32(&mut out, z.re as f32);
                put_f32(&mut out, z.im as f32);
            }
        }
    }
    debug_assert_eq!(out.len() as u64, total);
    Ok(out)
}

/// Parses ZCD1 bytes into samples.
pub fn dataset_from_bytes(buf: &[u8]) -> Result<Vec<ChannelSample>> {
    let mut c = Cursor::new(buf);
    c.magic(MAGIC)?;
    let version_at = c.offset();
    let version = c.u32("format version")?;
    if version != VERSION {
        return Err(Error::parse(
            version_at,
            format!("unsupported format version {version} (expected {VERSION})"),
        ));
    }
    let n_t = c.u32("antenna count")?;
    let k = c.u32("subcarrier count")?;
    let dims_at = c.offset();
    let u = c.u32("sample count")?;
    if n_t == 0 || k == 0 {
        return Err(Error::parse(dims_at, "antenna/subcarrier counts must be positive"));
    }
    // Length arithmetic in u128 so adversarial headers cannot overflow.
    let expected = HEADER_LEN as u128
        + u as u128 * (24u128 + 8u128 * n_t as u128 * k as u128);
    if expected != buf.len() as u128 {
        return Err(Error::parse(
            dims_at,
            format!(
                "length mismatch: header implies {expected} bytes, file has {}",
                buf.len()
            ),
        ));
    }

    let n_t = n_t as usize;
    let k = k as usize;
    let mut samples = Vec::with_capacity(u as usize);
    for _ in 0..u {
        let position = [
            c.f64("position x")?,
            c.f64("position y")?,
            c.f64("position z")?,
        ];
        let mut channel = Array2::<Complex64>::zeros((n_t, k));
        for ki in 0..k {
            for ni in 0..n_t {
                let re = c.f32("channel real part")?;
                let im = c.f32("channel imaginary part")?;
                channel[(ni, ki)] = Complex64::new(re as f64, im as f64);
            }
        }
        samples.push(ChannelSample { position, channel });
    }
    c.expect_end()?;
    Ok(samples)
}

/// Writes a dataset file.
pub fn write_dataset(path: &Path, samples: &[ChannelSample]) -> Result<()> {
    let bytes = dataset_to_bytes(samples)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a dataset file.
pub fn read_dataset(path: &Path) -> Result<Vec<ChannelSample>> {
    let bytes = std::fs::read(path)?;
    dataset_from_bytes(&bytes)
}
