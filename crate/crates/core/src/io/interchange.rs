//! CSV interchange for externally generated channels.
//!
//! One row per sample, no header:
//!
//! ```text
//! x,y,z,re(0;0),im(0;0),re(1;0),im(1;0),...   subcarrier-major: entry
//! (n;k) iterates n = 0..N_t-1 inside k = 0..K-1, matching ZCD1
//! ```
//!
//! so every row holds `3 + 2 N_t K` decimal floats. Floats are written
//! with the shortest representation that parses back to the same value.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::ChannelSample;

/// Reads interchange CSV for a declared channel shape.
pub fn read_interchange_csv(path: &Path, n_t: usize, k: usize) -> Result<Vec<ChannelSample>> {
    if n_t == 0 || k == 0 {
        return Err(Error::config("interchange shape must be positive"));
    }
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let expected_fields = 3 + 2 * n_t * k;
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_fields {
            return Err(Error::data(format!(
                "row {row}: expected {expected_fields} fields for N_t={n_t}, K={k}, got {}",
                fields.len()
            )));
        }
        let parse = |s: &str, col: usize| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                Error::data(format!("row {row}, field {}: '{s}' is not a number", col + 1))
            })
        };
        let position = [
            parse(fields[0], 0)?,
            parse(fields[1], 1)?,
            parse(fields[2], 2)?,
        ];
        let mut channel = Array2::<Complex64>::zeros((n_t, k));
        let mut col = 3;
        for ki in 0..k {
            for ni in 0..n_t {
                let re = parse(fields[col], col)?;
                let im = parse(fields[col + 1], col + 1)?;
                channel[(ni, ki)] = Complex64::new(re, im);
                col += 2;
            }
        }
        samples.push(ChannelSample { position, channel });
    }
    if samples.is_empty() {
        return Err(Error::data("interchange file contains no samples"));
    }
    Ok(samples)
}

/// Writes interchange CSV (the inverse of [`read_interchange_csv`]).
pub fn write_interchange_csv(path: &Path, samples: &[ChannelSample]) -> Result<()> {
    let first = samples
        .first()
        .ok_or_else(|| Error::data("cannot write an empty interchange file"))?;
    let (n_t, k) = first.channel.dim();
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for (i, s) in samples.iter().enumerate() {
        if s.channel.dim() != (n_t, k) {
            return Err(Error::data(format!(
                "sample {i} has shape {:?}, expected ({n_t}, {k})",
                s.channel.dim()
            )));
        }
        write!(out, "{},{},{}", s.position[0], s.position[1], s.position[2])?;
        for ki in 0..k {
            for ni in 0..n_t {
                let z = s.channel[(ni, ki)];
                write!(out, ",{},{}", z.re, z.im)?;
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_samples(count: usize, n_t: usize, k: usize, seed: u64) -> Vec<ChannelSample> {
        let mut r = rng::stream(seed);
        (0..count)
            .map(|i| ChannelSample {
                position: [i as f64 + 0.25, 1.5 * i as f64, 1.5],
                channel: Array2::from_shape_fn((n_t, k), |_| rng::complex_standard_normal(&mut r)),
            })
            .collect()
    }

    #[test]
    fn round_trip_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("channels.csv");
        let samples = random_samples(4, 3, 2, 1);
        write_interchange_csv(&path, &samples).unwrap();
        let back = read_interchange_csv(&path, 3, 2).unwrap();
        // Shortest-representation floats parse back exactly.
        assert_eq!(back, samples);
    }

    #[test]
    fn field_count_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1.0,2.0,3.0,4.0\n").unwrap();
        let err = read_interchange_csv(&path, 2, 2).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn non_numeric_field_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        // N_t = 1, K = 1 -> 5 fields.
        std::fs::write(&path, "1.0,2.0,3.0,oops,5.0\n").unwrap();
        let err = read_interchange_csv(&path, 1, 1).unwrap_err();
        assert!(err.to_string().contains("field 4"), "{err}");
    }

    #[test]
    fn blank_lines_skipped_but_empty_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sparse.csv");
        std::fs::write(&path, "\n1.0,2.0,3.0,4.0,5.0\n\n").unwrap();
        let samples = read_interchange_csv(&path, 1, 1).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].channel[(0, 0)], Complex64::new(4.0, 5.0));
        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "\n\n").unwrap();
        assert!(read_interchange_csv(&empty, 1, 1).is_err());
    }
}
