//! Consistent answers: the Fourier-coefficient least squares for marginal
//! workloads, and the rank-decomposition route for dense workloads.
//!
//! Both return answers of the form Q x^c for some (hypothetical) data set
//! x^c, so cross-marginal aggregation identities hold exactly.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mask::BitMask;
use crate::matrix::DenseMatrix;
use crate::transform::{basis_marginal_entry, compact_index};
use crate::workload::MarginalSpec;

/// The system (C^{alpha_1}, ..., C^{alpha_l}) = R (f_1, ..., f_m) linking
/// stacked marginal entries to the workload's Fourier coefficients.
#[derive(Debug, Clone)]
pub struct FourierRecoverySystem {
    d: u8,
    /// F, ascending: every mask dominated by some workload marginal.
    masks: Vec<BitMask>,
    /// K x m with K = total marginal entries, m = |F|.
    matrix: DenseMatrix,
    /// Row span of each marginal within the stacked entry vector.
    spans: Vec<std::ops::Range<usize>>,
}

impl FourierRecoverySystem {
    pub fn dimension(&self) -> u8 {
        self.d
    }

    pub fn coefficient_masks(&self) -> &[BitMask] {
        &self.masks
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn spans(&self) -> &[std::ops::Range<usize>] {
        &self.spans
    }

    pub fn entry_count(&self) -> usize {
        self.matrix.rows()
    }

    pub fn coefficient_count(&self) -> usize {
        self.matrix.cols()
    }
}

/// Build the recovery system for a marginal workload. Coefficient masks are
/// deduplicated and sorted ascending; rows follow (marginal order, ascending
/// cell submask order).
pub fn build_fourier_system(specs: &[MarginalSpec], d: u8) -> Result<FourierRecoverySystem> {
    if specs.is_empty() {
        return Err(Error::Workload("workload has no marginals".into()));
    }
    let masks = crate::strategy::fourier_support(specs);
    if masks[0].dimension() != d {
        return Err(Error::DimensionMismatch(
            "workload dimension does not match d".into(),
        ));
    }
    let col_of = |beta: &BitMask| masks.binary_search(beta).expect("mask is in support");
    let k_total: usize = specs.iter().map(|s| s.cell_count()).sum();
    let mut matrix = DenseMatrix::zeros(k_total, masks.len());
    let mut spans = Vec::with_capacity(specs.len());
    let mut row = 0usize;
    for spec in specs {
        let alpha = spec.alpha;
        let start = row;
        for gamma in alpha.dominated() {
            for beta in alpha.dominated() {
                let entry = basis_marginal_entry(alpha, beta, gamma, d)?;
                matrix.set(row, col_of(&beta), entry);
            }
            row += 1;
        }
        spans.push(start..row);
    }
    Ok(FourierRecoverySystem {
        d,
        masks,
        matrix,
        spans,
    })
}

/// Least-squares consistency over Fourier coefficients: returns the fitted
/// coefficients and the consistent entry vector R * coeffs.
pub fn ls_consistent(sys: &FourierRecoverySystem, noisy: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if noisy.len() != sys.entry_count() {
        return Err(Error::DimensionMismatch(format!(
            "noisy vector has {} entries, system has {}",
            noisy.len(),
            sys.entry_count()
        )));
    }
    if noisy.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("noisy entries must be finite".into()));
    }
    let coeffs = linalg::lstsq(&sys.matrix, noisy)?;
    let consistent = sys.matrix.matvec(&coeffs)?;
    Ok((coeffs, consistent))
}

/// Consistency for an arbitrary dense workload. Full-row-rank Q returns y0
/// unchanged (every vector is consistent); otherwise Q is decomposed as
/// Q = C Q' over a pivoted independent row subset and the projection
/// argmin ||C v - y0|| is returned.
pub fn rank_consistent(q: &DenseMatrix, y0: &[f64]) -> Result<Vec<f64>> {
    if y0.len() != q.rows() {
        return Err(Error::DimensionMismatch(format!(
            "answer vector has {} entries, workload has {} rows",
            y0.len(),
            q.rows()
        )));
    }
    let pivots = independent_rows(q);
    if pivots.len() == q.rows() {
        return Ok(y0.to_vec());
    }
    // Q' = pivot rows; solve C Q' = Q via the Gram system Q'Q'^T C^T = Q'Q^T
    let qp = DenseMatrix::from_rows(
        &pivots
            .iter()
            .map(|&i| q.row(i).to_vec())
            .collect::<Vec<_>>(),
    )?;
    let qpt = qp.transpose();
    let gram = qp.matmul(&qpt)?;
    let rhs = qp.matmul(&q.transpose())?;
    let ct = linalg::psd_pinv_apply(&gram, &rhs, 1e-12)?;
    let c = ct.transpose();
    let v = linalg::lstsq(&c, y0)?;
    c.matvec(&v)
}

/// Indices of a maximal linearly independent row subset, chosen by Gaussian
/// elimination with partial pivoting.
fn independent_rows(q: &DenseMatrix) -> Vec<usize> {
    let (rows, cols) = (q.rows(), q.cols());
    let scale = q.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let tol = 1e-10 * scale;
    let mut work: Vec<Vec<f64>> = (0..rows).map(|i| q.row(i).to_vec()).collect();
    let mut order: Vec<usize> = (0..rows).collect();
    let mut rank = 0usize;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(best) = (rank..rows).max_by(|&a, &b| {
            work[a][c]
                .abs()
                .partial_cmp(&work[b][c].abs())
                .expect("finite entries")
        }) else {
            break;
        };
        if work[best][c].abs() <= tol {
            continue;
        }
        work.swap(rank, best);
        order.swap(rank, best);
        let pivot = work[rank][c];
        for r in rank + 1..rows {
            let f = work[r][c] / pivot;
            if f == 0.0 {
                continue;
            }
            for cc in c..cols {
                work[r][cc] -= f * work[rank][cc];
            }
        }
        pivots.push(order[rank]);
        rank += 1;
    }
    pivots.sort_unstable();
    pivots
}

/// Aggregate a marginal's entries down to a coarser marginal gamma dominated
/// by alpha. Used to check cross-marginal agreement.
pub fn aggregate_marginal(alpha: BitMask, entries: &[f64], gamma: BitMask) -> Result<Vec<f64>> {
    if !gamma.dominates_by(&alpha)? {
        return Err(Error::NotDominated {
            gamma: gamma.to_string(),
            alpha: alpha.to_string(),
        });
    }
    if entries.len() != 1usize << alpha.weight() {
        return Err(Error::DimensionMismatch(
            "entry count does not match marginal size".into(),
        ));
    }
    let mut out = vec![0.0; 1usize << gamma.weight()];
    for (i, delta) in alpha.dominated().enumerate() {
        let target = compact_index(delta.bits() & gamma.bits(), gamma.bits());
        out[target as usize] += entries[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{demo_vector, demo_workload};
    use crate::transform::{compute_marginal, fwht};

    fn m(s: &str) -> BitMask {
        BitMask::from_binary_str(s).unwrap()
    }

    #[test]
    fn system_shapes() {
        let single = [MarginalSpec::new(m("110"))];
        let sys = build_fourier_system(&single, 3).unwrap();
        assert_eq!(sys.coefficient_count(), 4);
        assert_eq!(sys.entry_count(), 4);

        let two = [MarginalSpec::new(m("100")), MarginalSpec::new(m("110"))];
        let sys = build_fourier_system(&two, 3).unwrap();
        assert_eq!(sys.coefficient_count(), 4); // coefficients of 110 cover 100
        assert_eq!(sys.entry_count(), 6);

        let oneway = [
            MarginalSpec::new(m("001")),
            MarginalSpec::new(m("010")),
            MarginalSpec::new(m("100")),
        ];
        let sys = build_fourier_system(&oneway, 3).unwrap();
        assert_eq!(sys.coefficient_count(), 4);
        assert_eq!(sys.entry_count(), 6);
    }

    #[test]
    fn gram_matrix_is_diagonal() {
        // columns of the system matrix are orthogonal by construction
        let two = [MarginalSpec::new(m("100")), MarginalSpec::new(m("110"))];
        let sys = build_fourier_system(&two, 3).unwrap();
        let gram = sys.matrix().transpose().matmul(sys.matrix()).unwrap();
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                if i != j {
                    assert!(gram.get(i, j).abs() < 1e-12);
                } else {
                    assert!(gram.get(i, j) > 0.0);
                }
            }
        }
    }

    #[test]
    fn single_marginal_system_is_invertible() {
        let single = [MarginalSpec::new(m("110"))];
        let sys = build_fourier_system(&single, 3).unwrap();
        let noisy = [3.2, 0.9, -0.1, 1.4];
        let (_, consistent) = ls_consistent(&sys, &noisy).unwrap();
        for (a, b) in consistent.iter().zip(&noisy) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_input_reproduces_true_coefficients() {
        let x = demo_vector();
        let specs = demo_workload().marginal_specs().unwrap().to_vec();
        let sys = build_fourier_system(&specs, 3).unwrap();
        let mut exact = compute_marginal(m("100"), &x).unwrap();
        exact.extend(compute_marginal(m("110"), &x).unwrap());
        let (coeffs, consistent) = ls_consistent(&sys, &exact).unwrap();
        for (a, b) in consistent.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9);
        }
        let truth = fwht(&x);
        for (mask, c) in sys.coefficient_masks().iter().zip(&coeffs) {
            assert!((truth.get(*mask).unwrap() - c).abs() < 1e-9);
        }
    }

    #[test]
    fn sum_rule_holds_after_ls() {
        let specs = demo_workload().marginal_specs().unwrap().to_vec();
        let sys = build_fourier_system(&specs, 3).unwrap();
        // noisy answers that violate the aggregation identity
        let noisy = [4.0, 2.0, 2.5, 1.5, 0.3, 0.9];
        let (_, cons) = ls_consistent(&sys, &noisy).unwrap();
        // marginal over a from its own block vs aggregated from the a,b block
        let a_direct = &cons[0..2];
        let ab = &cons[2..6];
        let a_agg = aggregate_marginal(m("110"), ab, m("100")).unwrap();
        for (x, y) in a_direct.iter().zip(&a_agg) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn ls_never_moves_further_than_the_truth() {
        let x = demo_vector();
        let specs = demo_workload().marginal_specs().unwrap().to_vec();
        let sys = build_fourier_system(&specs, 3).unwrap();
        let mut truth = compute_marginal(m("100"), &x).unwrap();
        truth.extend(compute_marginal(m("110"), &x).unwrap());
        let noisy = [4.9, 2.2, 2.9, 1.8, -0.4, 1.6];
        let (_, cons) = ls_consistent(&sys, &noisy).unwrap();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        assert!(dist(&cons, &noisy) <= dist(&truth, &noisy) + 1e-9);
    }

    #[test]
    fn rank_consistent_full_rank_returns_input() {
        let q = DenseMatrix::identity(4);
        let y0 = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(rank_consistent(&q, &y0).unwrap(), y0.to_vec());
    }

    #[test]
    fn rank_consistent_exact_answers_are_fixed() {
        let w = demo_workload();
        let q = w.matrix(3).unwrap();
        let x = demo_vector();
        let y0 = q.matvec(x.cells()).unwrap();
        let out = rank_consistent(&q, &y0).unwrap();
        for (a, b) in out.iter().zip(&y0) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_consistent_projects_into_range() {
        let w = demo_workload();
        let q = w.matrix(3).unwrap();
        let x = demo_vector();
        let truth = q.matvec(x.cells()).unwrap();
        let y0: Vec<f64> = truth
            .iter()
            .enumerate()
            .map(|(i, v)| v + if i % 2 == 0 { 0.7 } else { -0.4 })
            .collect();
        let out = rank_consistent(&q, &y0).unwrap();
        // output respects the aggregation identity (it lies in range(Q))
        assert!((out[0] - (out[2] + out[3])).abs() < 1e-8);
        assert!((out[1] - (out[4] + out[5])).abs() < 1e-8);
        // and is no further from y0 than the truth
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        assert!(dist(&out, &y0) <= dist(&truth, &y0) + 1e-9);
    }

    #[test]
    fn ls_and_rank_agree_on_marginal_workloads() {
        let specs = demo_workload().marginal_specs().unwrap().to_vec();
        let sys = build_fourier_system(&specs, 3).unwrap();
        let q = demo_workload().matrix(3).unwrap();
        let noisy = [5.2, 1.8, 2.1, 3.3, 0.2, 1.1];
        let (_, via_ls) = ls_consistent(&sys, &noisy).unwrap();
        let via_rank = rank_consistent(&q, &noisy).unwrap();
        for (a, b) in via_ls.iter().zip(&via_rank) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
