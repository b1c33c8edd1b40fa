//! Internal dense linear algebra: Householder least squares and a cyclic
//! Jacobi eigensolver for symmetric matrices. Sized for the moderate systems
//! this crate materializes; nothing here is exposed publicly.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Solve min ||A x - b||_2 by Householder QR. Falls back to the minimum-norm
/// solution via the eigendecomposition of A^T A when A is rank-deficient.
pub(crate) fn lstsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "lstsq: {}x{} system with rhs of length {}",
            m,
            n,
            b.len()
        )));
    }
    if m < n {
        return lstsq_min_norm(a, b);
    }
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut col_norm_max: f64 = 0.0;
    for k in 0..n {
        // Householder vector for column k below the diagonal
        let mut norm = 0.0;
        for i in k..m {
            norm += r.get(i, k) * r.get(i, k);
        }
        let norm = norm.sqrt();
        col_norm_max = col_norm_max.max(norm);
        if norm <= 1e-13 * col_norm_max.max(1.0) {
            // effectively rank-deficient
            return lstsq_min_norm(a, b);
        }
        let alpha = if r.get(k, k) >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - k];
        v[0] = r.get(k, k) - alpha;
        for i in k + 1..m {
            v[i - k] = r.get(i, k);
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // apply H = I - 2 v v^T / (v^T v) to remaining columns and rhs
        for c in k..n {
            let mut dot = 0.0;
            for i in k..m {
                dot += v[i - k] * r.get(i, c);
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                let val = r.get(i, c) - f * v[i - k];
                r.set(i, c, val);
            }
        }
        let mut dot = 0.0;
        for i in k..m {
            dot += v[i - k] * rhs[i];
        }
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            rhs[i] -= f * v[i - k];
        }
    }
    // back substitution on the upper triangle
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for c in k + 1..n {
            acc -= r.get(k, c) * x[c];
        }
        let diag = r.get(k, k);
        if diag.abs() <= 1e-13 * col_norm_max.max(1.0) {
            return lstsq_min_norm(a, b);
        }
        x[k] = acc / diag;
    }
    Ok(x)
}

/// Minimum-norm least squares via the pseudo-inverse of the Gram matrix.
pub(crate) fn lstsq_min_norm(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let at = a.transpose();
    let gram = at.matmul(a)?;
    let atb = at.matvec(b)?;
    let (vals, vecs) = jacobi_eigh(&gram)?;
    let cutoff = 1e-12 * vals.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let n = gram.rows();
    // x = V diag(1/lambda) V^T atb over the retained spectrum
    let mut proj = vec![0.0; n];
    for j in 0..n {
        if vals[j] <= cutoff {
            continue;
        }
        let mut dot = 0.0;
        for i in 0..n {
            dot += vecs.get(i, j) * atb[i];
        }
        let f = dot / vals[j];
        for i in 0..n {
            proj[i] += f * vecs.get(i, j);
        }
    }
    Ok(proj)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvector columns); eigenvalues unordered.
pub(crate) fn jacobi_eigh(sym: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = sym.rows();
    if sym.cols() != n {
        return Err(Error::DimensionMismatch(
            "jacobi_eigh needs a square matrix".into(),
        ));
    }
    let mut a = sym.clone();
    let mut v = DenseMatrix::identity(n);
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        let scale: f64 = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
        if off.sqrt() <= 1e-14 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let vals = (0..n).map(|i| a.get(i, i)).collect();
    Ok((vals, v))
}

/// Apply the pseudo-inverse of a symmetric positive semi-definite matrix to
/// each column of `rhs`, dropping eigenvalues below `rel_cutoff` times the
/// largest.
pub(crate) fn psd_pinv_apply(
    sym: &DenseMatrix,
    rhs: &DenseMatrix,
    rel_cutoff: f64,
) -> Result<DenseMatrix> {
    let (vals, vecs) = jacobi_eigh(sym)?;
    let lam_max = vals.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_cutoff * lam_max.max(1e-300);
    let n = sym.rows();
    let cols = rhs.cols();
    if rhs.rows() != n {
        return Err(Error::DimensionMismatch(
            "psd_pinv_apply shape mismatch".into(),
        ));
    }
    // out = V diag(1/lambda) V^T rhs
    let vt_rhs = vecs.transpose().matmul(rhs)?;
    let mut scaled = vt_rhs;
    for j in 0..n {
        let inv = if vals[j] > cutoff { 1.0 / vals[j] } else { 0.0 };
        for c in 0..cols {
            let v = scaled.get(j, c) * inv;
            scaled.set(j, c, v);
        }
    }
    vecs.matmul(&scaled)
}
