//! Optimal non-uniform noise budgeting over a grouped strategy, plus the
//! uniform baseline.
//!
//! With the rows of S partitioned into groups carrying constants C_r, every
//! per-column privacy constraint collapses to sum_r C_r eta_r = eps (Pure)
//! or sum_r C_r^2 eta_r^2 = eps^2 (Approx), and the Lagrange conditions give
//! closed-form budgets: eta_r proportional to (s_r/C_r)^{1/3} in the Pure
//! case and to sqrt(sqrt(s_r)/C_r) in the Approx case, where s_r sums the
//! per-row weights b_i = 2 sum_j a_j R_ji^2 over the group.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::mechanism::PrivacySpec;
use crate::strategy::{recovery_consistent_with_grouping, Grouping};

/// Relative tolerance used to decide group-wise b equality (the condition
/// under which the grouped solution is provably optimal).
const B_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimalityStatus {
    /// The b-vector is group-constant; the grouped closed form is optimal.
    Optimal,
    /// Feasible for the original program, optimality not guaranteed.
    FeasibleOnly,
}

#[derive(Debug, Clone)]
pub struct BudgetProblem {
    b: Vec<f64>,
    grouping: Grouping,
    spec: PrivacySpec,
    /// Per-group sums s_r.
    s: Vec<f64>,
}

impl BudgetProblem {
    pub fn new(b: Vec<f64>, grouping: Grouping, spec: PrivacySpec) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::BudgetConstraint(
                "per-row weights b must be non-negative and finite".into(),
            ));
        }
        let s = grouping.group_sums(&b)?;
        Ok(BudgetProblem {
            b,
            grouping,
            spec,
            s,
        })
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn grouping(&self) -> &Grouping {
        &self.grouping
    }

    pub fn spec(&self) -> &PrivacySpec {
        &self.spec
    }

    pub fn group_sums(&self) -> &[f64] {
        &self.s
    }

    fn optimality(&self) -> OptimalityStatus {
        if recovery_consistent_with_grouping(&self.b, &self.grouping, B_CONSISTENCY_TOL) {
            OptimalityStatus::Optimal
        } else {
            OptimalityStatus::FeasibleOnly
        }
    }

    fn solution_from_eta(&self, eta: Vec<f64>, objective: f64) -> BudgetSolution {
        let eps: Vec<f64> = self.grouping.group_of().iter().map(|&r| eta[r]).collect();
        let sigma_diag: Vec<Option<f64>> = eps
            .iter()
            .map(|&e| {
                if e == 0.0 {
                    None
                } else {
                    Some(self.spec.row_variance(e))
                }
            })
            .collect();
        BudgetSolution {
            eta,
            eps,
            sigma_diag,
            objective,
            optimality: self.optimality(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BudgetSolution {
    /// Per-group budgets eta_r; 0 marks a suppressed group.
    pub eta: Vec<f64>,
    /// Per-row budgets (each row inherits its group's eta).
    pub eps: Vec<f64>,
    /// Per-row noise variance; None for suppressed rows.
    pub sigma_diag: Vec<Option<f64>>,
    /// Predicted objective value for this budgeting.
    pub objective: f64,
    pub optimality: OptimalityStatus,
}

/// b_i = 2 sum_j a_j R_ji^2: the weight each strategy row contributes to
/// the objective, given recovery matrix R (q x m) and query weights a.
pub fn compute_b(r: &DenseMatrix, a: &[f64]) -> Result<Vec<f64>> {
    if a.len() != r.rows() {
        return Err(Error::DimensionMismatch(format!(
            "weight vector length {} does not match {} recovery rows",
            a.len(),
            r.rows()
        )));
    }
    if a.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::BudgetConstraint(
            "weights must be non-negative and finite".into(),
        ));
    }
    let m = r.cols();
    let mut b = vec![0.0; m];
    for j in 0..r.rows() {
        let aj = a[j];
        if aj == 0.0 {
            continue;
        }
        let row = r.row(j);
        for (i, &v) in row.iter().enumerate() {
            b[i] += 2.0 * aj * v * v;
        }
    }
    Ok(b)
}

fn objective_value(spec: &PrivacySpec, s: &[f64], eta: &[f64]) -> f64 {
    let base: f64 = s
        .iter()
        .zip(eta)
        .filter(|(&sr, _)| sr > 0.0)
        .map(|(&sr, &er)| sr / (er * er))
        .sum();
    match spec {
        PrivacySpec::Pure { .. } => base,
        PrivacySpec::Approx { delta, .. } => 2.0 * (2.0 / delta).ln() * base,
    }
}

fn check_not_empty(s: &[f64]) -> Result<()> {
    if s.iter().all(|&v| v == 0.0) {
        return Err(Error::NothingToRelease);
    }
    Ok(())
}

/// Lagrange closed form for the Pure grouped program: eta_r proportional to
/// (s_r/C_r)^{1/3}, normalized so sum_r C_r eta_r = eps exactly.
pub fn solve_pure(p: &BudgetProblem) -> Result<BudgetSolution> {
    let PrivacySpec::Pure { epsilon } = p.spec else {
        return Err(Error::Privacy(
            "solve_pure requires a Pure privacy spec".into(),
        ));
    };
    check_not_empty(&p.s)?;
    let c = p.grouping.constants();
    let denom: f64 =
        p.s.iter()
            .zip(c)
            .filter(|(&sr, _)| sr > 0.0)
            .map(|(&sr, &cr)| (cr * cr * sr).cbrt())
            .sum();
    let eta: Vec<f64> =
        p.s.iter()
            .zip(c)
            .map(|(&sr, &cr)| {
                if sr > 0.0 {
                    epsilon * (sr / cr).cbrt() / denom
                } else {
                    0.0
                }
            })
            .collect();
    let objective = objective_value(&p.spec, &p.s, &eta);
    Ok(p.solution_from_eta(eta, objective))
}

/// Closed form for the Approx grouped program: eta_r^2 = (eps^2/C_r)
/// sqrt(s_r) / sum_j C_j sqrt(s_j), normalized so sum C_r^2 eta_r^2 = eps^2.
pub fn solve_approx(p: &BudgetProblem) -> Result<BudgetSolution> {
    let PrivacySpec::Approx { epsilon, .. } = p.spec else {
        return Err(Error::Privacy(
            "solve_approx requires an Approx privacy spec".into(),
        ));
    };
    check_not_empty(&p.s)?;
    let c = p.grouping.constants();
    let denom: f64 =
        p.s.iter()
            .zip(c)
            .filter(|(&sr, _)| sr > 0.0)
            .map(|(&sr, &cr)| cr * sr.sqrt())
            .sum();
    let eta: Vec<f64> =
        p.s.iter()
            .zip(c)
            .map(|(&sr, &cr)| {
                if sr > 0.0 {
                    (epsilon * epsilon * sr.sqrt() / (cr * denom)).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
    let objective = objective_value(&p.spec, &p.s, &eta);
    Ok(p.solution_from_eta(eta, objective))
}

/// Uniform baseline: the same budget for every group, normalized to the mode's
/// constraint. Every row is released, including rows unused by the recovery.
pub fn uniform_budget(p: &BudgetProblem) -> Result<BudgetSolution> {
    let c = p.grouping.constants();
    let eta_value = match p.spec {
        PrivacySpec::Pure { epsilon } => epsilon / c.iter().sum::<f64>(),
        PrivacySpec::Approx { epsilon, .. } => {
            epsilon / c.iter().map(|v| v * v).sum::<f64>().sqrt()
        }
    };
    let eta = vec![eta_value; c.len()];
    let objective = objective_value(&p.spec, &p.s, &eta);
    Ok(p.solution_from_eta(eta, objective))
}

/// Dispatch on the spec's mode.
pub fn solve_optimal(p: &BudgetProblem) -> Result<BudgetSolution> {
    match p.spec {
        PrivacySpec::Pure { .. } => solve_pure(p),
        PrivacySpec::Approx { .. } => solve_approx(p),
    }
}

/// Closed form for the per-row weights of the natural Fourier recovery on the
/// all-k-way workload: b depends only on the coefficient mask's weight w,
/// and equals 2^{d-k+1} * binomial(d-w, k-w) for w = 0..=k.
pub fn kway_b_closed_form(d: u8, k: u8) -> Result<Vec<f64>> {
    if k > d {
        return Err(Error::Config(format!("k = {k} exceeds d = {d}")));
    }
    let scale = ((d - k + 1) as f64).exp2();
    Ok((0..=k)
        .map(|w| scale * binomial((d - w) as u64, (k - w) as u64))
        .collect())
}

/// Exact binomial coefficient as f64 (stays well inside f64 range for d <= 30).
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
