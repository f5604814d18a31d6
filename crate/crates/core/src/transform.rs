//! Angular-delay domain transform and the real vector domain of the
//! autoencoder.
//!
//! Frequency-domain channels (antenna x subcarrier) are mapped through a
//! unitary 2D DFT into the angular-delay domain, truncated to the first
//! `n_c` delay columns, and vectorized as `[all real, all imaginary]`
//! (row-major). The unitary normalization makes the transform
//! norm-preserving, so NMSE is identical in both domains.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-valued autoencoder input/target: the truncated angular-delay
/// channel, vectorized as `[real parts row-major, imaginary parts
/// row-major]`, total length `2 * n_t * n_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularDelayVector {
    pub values: Array1<f64>,
    pub n_t: usize,
    pub n_c: usize,
}

impl AngularDelayVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Squared 2-norm of the vector.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Unitary DFT matrix of size `n x n`: entry `(p, q) = exp(-j 2 pi p q / n) / sqrt(n)`.
pub fn unitary_dft(n: usize) -> Result<Array2<Complex64>> {
    if n == 0 {
        return Err(Error::config("DFT size must be at least 1"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut f = Array2::zeros((n, n));
    for p in 0..n {
        for q in 0..n {
            let phase = -2.0 * std::f64::consts::PI * (p as f64) * (q as f64) / (n as f64);
            f[(p, q)] = Complex64::from_polar(scale, phase);
        }
    }
    Ok(f)
}

/// Precomputed 2D-DFT pair mapping frequency-domain channels of shape
/// `(n_t, k)` to the angular-delay domain and back.
#[derive(Debug, Clone)]
pub struct AngularDelayTransform {
    f_a: Array2<Complex64>,
    f_d: Array2<Complex64>,
    n_t: usize,
    k: usize,
}

impl AngularDelayTransform {
    pub fn new(n_t: usize, k: usize) -> Result<Self> {
        Ok(Self {
            f_a: unitary_dft(n_t)?,
            f_d: unitary_dft(k)?,
            n_t,
            k,
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn check_shape(&self, h: &Array2<Complex64>) -> Result<()> {
        if h.nrows() != self.n_t || h.ncols() != self.k {
            return Err(Error::data(format!(
                "channel shape ({}, {}) does not match configured ({}, {})",
                h.nrows(),
                h.ncols(),
                self.n_t,
                self.k
            )));
        }
        Ok(())
    }

    /// `H = F_a * H_bar * F_d^H`. Norm-preserving.
    pub fn to_angular_delay(&self, h_bar: &Array2<Complex64>) -> Result<Array2<Complex64>> {
        self.check_shape(h_bar)?;
        let fd_h = hermitian(&self.f_d);
        Ok(self.f_a.dot(h_bar).dot(&fd_h))
    }

    /// Inverse map: `H_bar = F_a^H * H * F_d`.
    pub fn from_angular_delay(&self, h: &Array2<Complex64>) -> Result<Array2<Complex64>> {
        self.check_shape(h)?;
        let fa_h = hermitian(&self.f_a);
        Ok(fa_h.dot(h).dot(&self.f_d))
    }
}

fn hermitian(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|z| z.conj())
}

/// Keeps the first `n_c` delay columns of an angular-delay channel and
/// vectorizes to the real autoencoder domain.
pub fn truncate_and_vectorize(h: &Array2<Complex64>, n_c: usize) -> Result<AngularDelayVector> {
    let (n_t, k) = h.dim();
    if n_c > k {
        return Err(Error::config(format!(
            "truncation length {n_c} exceeds subcarrier count {k}"
        )));
    }
    if n_c == 0 {
        return Err(Error::config("truncation length must be at least 1"));
    }
    let mut values = Array1::zeros(2 * n_t * n_c);
    for n in 0..n_t {
        for c in 0..n_c {
            values[n * n_c + c] = h[(n, c)].re;
            values[n_t * n_c + n * n_c + c] = h[(n, c)].im;
        }
    }
    Ok(AngularDelayVector { values, n_t, n_c })
}

/// Right inverse of [`truncate_and_vectorize`]: rebuilds the `(n_t, k)`
/// angular-delay matrix, zero-padding delay columns `n_c..k`.
pub fn devectorize_and_embed(v: &AngularDelayVector, k: usize) -> Result<Array2<Complex64>> {
    if v.n_c > k {
        return Err(Error::config(format!(
            "cannot embed {} delay columns into {} subcarriers",
            v.n_c, k
        )));
    }
    if v.values.len() != 2 * v.n_t * v.n_c {
        return Err(Error::data(format!(
            "vector length {} does not match dims ({}, {})",
            v.values.len(),
            v.n_t,
            v.n_c
        )));
    }
    let mut h = Array2::zeros((v.n_t, k));
    for n in 0..v.n_t {
        for c in 0..v.n_c {
            let re = v.values[n * v.n_c + c];
            let im = v.values[v.n_t * v.n_c + n * v.n_c + c];
            h[(n, c)] = Complex64::new(re, im);
        }
    }
    Ok(h)
}

/// Global max-absolute-value scaling fitted on the training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    scale: f64,
}

impl Normalizer {
    /// Wraps an externally stored scale (e.g. from a model bundle).
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::data(format!(
                "normalizer scale must be a positive finite number, got {scale}"
            )));
        }
        Ok(Self { scale })
    }

    /// Fits the scale as the maximum absolute entry over the training set.
    pub fn fit<'a>(training: impl IntoIterator<Item = &'a AngularDelayVector>) -> Result<Self> {
        let mut scale = 0.0_f64;
        let mut seen = false;
        for v in training {
            seen = true;
            for &x in v.values.iter() {
                scale = scale.max(x.abs());
            }
        }
        if !seen {
            return Err(Error::data("cannot fit normalizer on an empty training set"));
        }
        if scale <= 0.0 {
            return Err(Error::data("cannot fit normalizer on an all-zero training set"));
        }
        Ok(Self { scale })
    }

    pub fn from_scale(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::data(format!("normalizer scale must be positive, got {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply(&self, v: &AngularDelayVector) -> AngularDelayVector {
        AngularDelayVector {
            values: &v.values / self.scale,
            n_t: v.n_t,
            n_c: v.n_c,
        }
    }

    pub fn invert(&self, v: &AngularDelayVector) -> AngularDelayVector {
        AngularDelayVector {
            values: &v.values * self.scale,
            n_t: v.n_t,
            n_c: v.n_c,
        }
    }
}

/// Compression rate `gamma = L / (2 N_t N_c)` as an exact reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionRate {
    pub numer: u64,
    pub denom: u64,
}

impl CompressionRate {
    pub fn as_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl std::fmt::Display for CompressionRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.denom == 1 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/{}", self.numer, self.denom)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `gamma = L / (2 N_t N_c)`, reduced.
pub fn compression_rate(l: usize, n_t: usize, n_c: usize) -> Result<CompressionRate> {
    if l == 0 || n_t == 0 || n_c == 0 {
        return Err(Error::config("compression rate requires positive L, N_t, N_c"));
    }
    let numer = l as u64;
    let denom = 2 * n_t as u64 * n_c as u64;
    let g = gcd(numer, denom);
    Ok(CompressionRate {
        numer: numer / g,
        denom: denom / g,
    })
}
