//! Dense Hermitian eigendecomposition via cyclic Jacobi rotations.
//!
//! Matrix sizes in this crate stay small (subspace estimation on truncated
//! channels), so an O(n^3)-per-sweep Jacobi solver is plenty and keeps the
//! build free of external LAPACK backends.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted in
/// non-increasing order and eigenvectors as the corresponding columns,
/// satisfying `A v_i = lambda_i v_i` and `V^H V = I`.
pub fn hermitian_eigen(a: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::data(format!(
            "hermitian_eigen requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let herm_dev = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - a[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale > 0.0 && herm_dev > 1e-9 * scale {
        return Err(Error::data(format!(
            "matrix is not Hermitian (max deviation {herm_dev:.3e})"
        )));
    }

    let mut m = a.clone();
    let mut v: Array2<Complex64> = Array2::eye(n);

    let off = |m: &Array2<Complex64>| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += m[(p, q)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        if off(&m) <= tol * (n as f64) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= tol {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let beta = (aqq - app) / (2.0 * r);
                let t = if beta >= 0.0 {
                    1.0 / (beta + (1.0 + beta * beta).sqrt())
                } else {
                    -1.0 / (-beta + (1.0 + beta * beta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = apq / r; // e^{i theta}

                // Right-multiply by G: columns p and q mix.
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * c - miq * s * phase.conj();
                    m[(i, q)] = mip * s * phase + miq * c;
                }
                // Left-multiply by G^H: rows p and q mix.
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * c - mqj * s * phase;
                    m[(q, j)] = mpj * s * phase.conj() + mqj * c;
                }
                // Accumulate eigenvectors.
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * s * phase.conj();
                    v[(i, q)] = vip * s * phase + viq * c;
                }
                // Force exact zero and real diagonal against roundoff drift.
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
            }
        }
    }
    if off(&m) > 1e-8 * scale.max(f64::MIN_POSITIVE) * (n as f64) {
        return Err(Error::numeric(
            "Jacobi eigensolver failed to converge".to_string(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok((eigenvalues, vectors))
}
