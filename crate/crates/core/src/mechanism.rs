//! Calibrated noise: sensitivity, per-row budget checks, and the sampled
//! strategy answer z = Sx + nu.
//!
//! Laplace noise comes from an inverse-CDF draw on a 64-bit uniform;
//! Gaussian noise from the Marsaglia polar method. Every row draws from its
//! own counter-derived stream of one seeded ChaCha generator, so releases are
//! reproducible row by row regardless of sampling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::strategy::StrategyMatrix;
use crate::vector::ContingencyVector;

/// Slack allowed when checking the budget normalization.
const CONSTRAINT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrivacySpec {
    /// epsilon-differential privacy via Laplace noise.
    Pure { epsilon: f64 },
    /// (epsilon, delta)-differential privacy via Gaussian noise.
    Approx { epsilon: f64, delta: f64 },
}

impl PrivacySpec {
    pub fn pure(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Privacy(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(PrivacySpec::Pure { epsilon })
    }

    pub fn approx(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Privacy(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
            return Err(Error::Privacy(format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        Ok(PrivacySpec::Approx { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            PrivacySpec::Pure { epsilon } | PrivacySpec::Approx { epsilon, .. } => *epsilon,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self {
            PrivacySpec::Pure { .. } => None,
            PrivacySpec::Approx { delta, .. } => Some(*delta),
        }
    }

    /// Noise variance of a row answered with budget eps_i: 2/eps_i^2 for
    /// Laplace, 2 log(2/delta)/eps_i^2 for Gaussian.
    pub fn row_variance(&self, eps_i: f64) -> f64 {
        match self {
            PrivacySpec::Pure { .. } => 2.0 / (eps_i * eps_i),
            PrivacySpec::Approx { delta, .. } => 2.0 * (2.0 / delta).ln() / (eps_i * eps_i),
        }
    }
}

/// The noisy strategy answer. Rows with a zero budget are suppressed: they
/// carry no value and no scale.
#[derive(Debug, Clone)]
pub struct NoisyAnswer {
    pub z: Vec<f64>,
    /// Noise standard deviation per row; None marks a suppressed row.
    pub per_row_scale: Vec<Option<f64>>,
    pub seed: u64,
}

impl NoisyAnswer {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn is_suppressed(&self, row: usize) -> bool {
        self.per_row_scale[row].is_none()
    }

    pub fn value(&self, row: usize) -> Result<f64> {
        if self.is_suppressed(row) {
            return Err(Error::SuppressedRow(row));
        }
        Ok(self.z[row])
    }
}

/// Max column L1 norm of a dense matrix.
pub fn l1_sensitivity(m: &DenseMatrix) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..m.cols() {
        let mut acc = 0.0;
        for i in 0..m.rows() {
            acc += m.get(i, j).abs();
        }
        best = best.max(acc);
    }
    best
}

/// Max column L2 norm of a dense matrix.
pub fn l2_sensitivity(m: &DenseMatrix) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..m.cols() {
        let mut acc = 0.0;
        for i in 0..m.rows() {
            acc += m.get(i, j) * m.get(i, j);
        }
        best = best.max(acc);
    }
    best.sqrt()
}

/// Check the per-column budget constraint for the given strategy: for Pure,
/// sum_i |S_ij| eps_i <= eps for all j; for Approx,
/// sqrt(sum_i S_ij^2 eps_i^2) <= eps for all j.
pub fn check_budgets(s: &StrategyMatrix, budgets: &[f64], spec: &PrivacySpec) -> Result<()> {
    if budgets.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::BudgetConstraint(
            "budgets must be non-negative and finite".into(),
        ));
    }
    let eps = spec.epsilon();
    let used = match spec {
        PrivacySpec::Pure { .. } => s.max_column_l1_weighted(budgets)?,
        PrivacySpec::Approx { .. } => s.max_column_l2_weighted(budgets)?,
    };
    if used > eps * (1.0 + CONSTRAINT_SLACK) {
        return Err(Error::BudgetConstraint(format!(
            "column budget norm {used} exceeds epsilon {eps}"
        )));
    }
    Ok(())
}

/// Per-row RNG: one ChaCha stream per row of a single seeded generator.
fn row_rng(seed: u64, row: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(row as u64 + 1);
    rng
}

/// Uniform in the open interval (-1/2, 1/2) from one 64-bit draw.
fn open_uniform_centered(rng: &mut ChaCha12Rng) -> f64 {
    // 53 significant bits, shifted to the open unit interval
    let u = ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    u - 0.5
}

/// Laplace(0, scale) via inverse CDF.
pub(crate) fn sample_laplace(rng: &mut ChaCha12Rng, scale: f64) -> f64 {
    let u = open_uniform_centered(rng);
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Gaussian(0, sigma) via the polar method.
pub(crate) fn sample_gaussian(rng: &mut ChaCha12Rng, sigma: f64) -> f64 {
    loop {
        let v1 = 2.0 * (open_uniform_centered(rng) + 0.5) - 1.0;
        let v2 = 2.0 * (open_uniform_centered(rng) + 0.5) - 1.0;
        let s = v1 * v1 + v2 * v2;
        if s > 0.0 && s < 1.0 {
            return sigma * v1 * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Release the noisy strategy answer z = Sx + nu under per-row budgets.
/// Rows with a zero budget are suppressed. With `noiseless` set the budget
/// checks still run but z = Sx exactly (test hook for the infinite-budget
/// limit).
pub fn release(
    s: &StrategyMatrix,
    x: &ContingencyVector,
    budgets: &[f64],
    spec: &PrivacySpec,
    seed: u64,
    noiseless: bool,
) -> Result<NoisyAnswer> {
    if budgets.len() != s.row_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} budgets for {} strategy rows",
            budgets.len(),
            s.row_count()
        )));
    }
    check_budgets(s, budgets, spec)?;
    let exact = s.apply(x)?;
    let mut z = Vec::with_capacity(exact.len());
    let mut scales = Vec::with_capacity(exact.len());
    for (i, (&sx, &eps_i)) in exact.iter().zip(budgets).enumerate() {
        if eps_i == 0.0 {
            z.push(0.0);
            scales.push(None);
            continue;
        }
        let variance = spec.row_variance(eps_i);
        let sd = variance.sqrt();
        if noiseless {
            z.push(sx);
            scales.push(Some(sd));
            continue;
        }
        let mut rng = row_rng(seed, i);
        let noise = match spec {
            // Laplace variance 2b^2 = 2/eps_i^2 at b = 1/eps_i
            PrivacySpec::Pure { .. } => sample_laplace(&mut rng, 1.0 / eps_i),
            PrivacySpec::Approx { .. } => sample_gaussian(&mut rng, sd),
        };
        z.push(sx + noise);
        scales.push(Some(sd));
    }
    Ok(NoisyAnswer {
        z,
        per_row_scale: scales,
        seed,
    })
}
