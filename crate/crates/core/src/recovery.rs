//! Variance-optimal recovery under heteroscedastic noise, and the release
//! bundle assembling the recovered answers with their predicted variances.

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::DenseMatrix;
use crate::mechanism::{NoisyAnswer, PrivacySpec};

/// Eigenvalue cutoff for the pseudo-inverse, relative to the largest.
const PINV_CUTOFF: f64 = 1e-10;
/// Reconstruction residual above which Q is declared outside row space of S.
const RESIDUAL_LIMIT: f64 = 1e-6;
/// Largest N for which the N x N normal matrix is materialized and
/// eigendecomposed.
const MAX_GLS_N: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoverySource {
    /// R = Q S^T for an orthonormal strategy.
    Orthonormal,
    /// Generalized least squares, weighted by inverse noise variances.
    Gls,
    /// The marginal-from-coefficients matrix of a Fourier strategy.
    FourierNatural,
    /// Supplied by construction (identity recovery, centroid aggregation,
    /// or caller-provided).
    UserSupplied,
}

impl RecoverySource {
    pub fn name(&self) -> &'static str {
        match self {
            RecoverySource::Orthonormal => "orthonormal",
            RecoverySource::Gls => "gls",
            RecoverySource::FourierNatural => "fourier-natural",
            RecoverySource::UserSupplied => "user-supplied",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryMatrix {
    pub matrix: DenseMatrix,
    pub source: RecoverySource,
}

impl RecoveryMatrix {
    pub fn new(matrix: DenseMatrix, source: RecoverySource) -> Self {
        RecoveryMatrix { matrix, source }
    }
}

/// Everything one release produces.
#[derive(Debug, Clone)]
pub struct ReleaseBundle {
    pub z: NoisyAnswer,
    pub recovery: RecoveryMatrix,
    /// Recovered workload answers y = R z.
    pub y: Vec<f64>,
    /// Consistent answers, when the consistency step ran.
    pub consistent: Option<Vec<f64>>,
    /// Predicted Var(y_i) per entry.
    pub predicted_entry_variance: Vec<f64>,
    /// a-weighted total predicted variance.
    pub predicted_total_variance: f64,
    pub metadata: ReleaseMetadata,
}

#[derive(Debug, Clone)]
pub struct ReleaseMetadata {
    pub seed: u64,
    pub spec: PrivacySpec,
    pub strategy: String,
    pub budget_mode: String,
    pub recovery_source: String,
    pub noiseless: bool,
}

/// The generalized-least-squares recovery R = Q (S^T Sigma^-1 S)^+ S^T Sigma^-1,
/// computed over the unsuppressed rows (None variances); suppressed rows come
/// back as all-zero columns of R.
///
/// Errors with [`Error::NotInRowSpace`] when Q cannot be reconstructed from S
/// (residual above 1e-6).
pub fn gls_recovery(
    q: &DenseMatrix,
    s: &DenseMatrix,
    sigma_diag: &[Option<f64>],
) -> Result<RecoveryMatrix> {
    if s.rows() != sigma_diag.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} variances for {} strategy rows",
            sigma_diag.len(),
            s.rows()
        )));
    }
    if q.cols() != s.cols() {
        return Err(Error::DimensionMismatch(
            "workload and strategy column counts differ".into(),
        ));
    }
    let n = s.cols();
    if n > MAX_GLS_N {
        return Err(Error::Config(format!(
            "dense GLS materializes an {n} x {n} normal matrix; use the \
             orthonormal shortcut for domains beyond {MAX_GLS_N}"
        )));
    }
    let active: Vec<usize> = (0..s.rows()).filter(|&i| sigma_diag[i].is_some()).collect();
    if active.is_empty() {
        return Err(Error::NothingToRelease);
    }
    for &i in &active {
        let v = sigma_diag[i].unwrap();
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Numeric(format!(
                "row {i} has non-positive variance {v}"
            )));
        }
    }
    // W = Sigma^-1 S over active rows; A = S^T W
    let ma = active.len();
    let mut w = DenseMatrix::zeros(ma, n);
    let mut s_active = DenseMatrix::zeros(ma, n);
    for (k, &i) in active.iter().enumerate() {
        let inv = 1.0 / sigma_diag[i].unwrap();
        for j in 0..n {
            let v = s.get(i, j);
            s_active.set(k, j, v);
            w.set(k, j, v * inv);
        }
    }
    let a = s_active.transpose().matmul(&w)?; // N x N, symmetric psd
    let apw = linalg::psd_pinv_apply(&a, &w.transpose(), PINV_CUTOFF)?; // N x ma
    let r_active = q.matmul(&apw)?; // q x ma

    // exact reconstruction check
    let back = r_active.matmul(&s_active)?;
    let residual = back.max_abs_diff(q);
    if residual > RESIDUAL_LIMIT {
        return Err(Error::NotInRowSpace(residual));
    }

    // re-embed suppressed rows as zero columns
    let mut full = DenseMatrix::zeros(q.rows(), s.rows());
    for (k, &i) in active.iter().enumerate() {
        for row in 0..q.rows() {
            full.set(row, i, r_active.get(row, k));
        }
    }
    Ok(RecoveryMatrix::new(full, RecoverySource::Gls))
}

/// y = R z. Suppressed rows of z may only be touched by zero entries of R.
pub fn answer(recovery: &RecoveryMatrix, z: &NoisyAnswer) -> Result<Vec<f64>> {
    let r = &recovery.matrix;
    if r.cols() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "recovery has {} columns, noisy answer has {} rows",
            r.cols(),
            z.len()
        )));
    }
    for j in 0..z.len() {
        if z.is_suppressed(j) && (0..r.rows()).any(|i| r.get(i, j) != 0.0) {
            return Err(Error::SuppressedRow(j));
        }
    }
    Ok((0..r.rows())
        .map(|i| r.row(i).iter().zip(&z.z).map(|(w, v)| w * v).sum::<f64>())
        .collect())
}

/// Per-entry Var(y_i) = sum_j R_ij^2 sigma_j and the a-weighted total.
pub fn predicted_variance(
    r: &DenseMatrix,
    sigma_diag: &[Option<f64>],
    a: &[f64],
) -> Result<(Vec<f64>, f64)> {
    if r.cols() != sigma_diag.len() {
        return Err(Error::DimensionMismatch(format!(
            "recovery has {} columns, {} variances given",
            r.cols(),
            sigma_diag.len()
        )));
    }
    if a.len() != r.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} queries",
            a.len(),
            r.rows()
        )));
    }
    let mut per_entry = Vec::with_capacity(r.rows());
    for i in 0..r.rows() {
        let mut acc = 0.0;
        for (j, &sig) in sigma_diag.iter().enumerate() {
            let w = r.get(i, j);
            if w == 0.0 {
                continue;
            }
            match sig {
                Some(v) => acc += w * w * v,
                None => return Err(Error::SuppressedRow(j)),
            }
        }
        per_entry.push(acc);
    }
    let total = per_entry.iter().zip(a).map(|(v, w)| v * w).sum();
    Ok((per_entry, total))
}
