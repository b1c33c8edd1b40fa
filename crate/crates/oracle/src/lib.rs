//! Brute-force reference implementations, compiled into test targets only.
//!
//! Everything here evaluates the defining formulas literally and shares no
//! algorithm code with the fast paths it validates: the transform is the
//! O(N^2) double loop, the budget optimum is an exhaustive simplex scan, and
//! the recovery oracle solves each query's constrained minimization through
//! an explicitly inverted KKT system.

// index-based loops keep the reference formulas literal
#![allow(clippy::needless_range_loop)]

use privcube_core::DenseMatrix;

/// O(N^2) Hadamard transform from the basis definition
/// f^alpha_beta = 2^{-d/2} (-1)^{<alpha,beta>}.
pub fn naive_hadamard(x: &[f64], d: u8) -> Vec<f64> {
    assert!(d <= 12, "naive transform is O(N^2); keep d small");
    let n = 1usize << d;
    assert_eq!(x.len(), n);
    let scale = 0.5f64.powf(d as f64 / 2.0);
    (0..n)
        .map(|alpha| {
            let mut acc = 0.0;
            for (beta, v) in x.iter().enumerate() {
                let parity = (alpha & beta).count_ones() % 2;
                acc += if parity == 0 { *v } else { -*v };
            }
            acc * scale
        })
        .collect()
}

/// Literal marginal summation (C^alpha x)_beta = sum over gamma with
/// gamma AND alpha = beta, entries in ascending submask order.
pub fn naive_marginal(alpha: u32, d: u8, x: &[f64]) -> Vec<f64> {
    assert!(d <= 12);
    let n = 1usize << d;
    assert_eq!(x.len(), n);
    // ascending submasks of alpha
    let mut subs = Vec::new();
    let mut s = 0u32;
    loop {
        subs.push(s);
        if s == alpha {
            break;
        }
        s = s.wrapping_sub(alpha) & alpha;
    }
    subs.iter()
        .map(|&beta| {
            x.iter()
                .enumerate()
                .filter(|(gamma, _)| *gamma as u32 & alpha == beta)
                .map(|(_, v)| v)
                .sum()
        })
        .collect()
}

/// Literal evaluation of (C^alpha f^beta)_gamma by summing the basis vector.
pub fn naive_basis_marginal_entry(alpha: u32, beta: u32, gamma: u32, d: u8) -> f64 {
    assert!(d <= 12);
    let n = 1usize << d;
    let scale = 0.5f64.powf(d as f64 / 2.0);
    let mut acc = 0.0;
    for eta in 0..n as u32 {
        if eta & alpha == gamma {
            let parity = (beta & eta).count_ones() % 2;
            acc += if parity == 0 { scale } else { -scale };
        }
    }
    acc
}

/// Exhaustive scan over the simplex sum C_r eta_r = eps at the given
/// resolution, minimizing sum s_r / eta_r^2. Supports g <= 3.
pub fn grid_budget_search(s: &[f64], c: &[f64], eps: f64, resolution: f64) -> f64 {
    assert!(s.len() == c.len() && !s.is_empty() && s.len() <= 3);
    let objective = |eta: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (&sr, &er) in s.iter().zip(eta) {
            if sr == 0.0 {
                continue;
            }
            if er <= 0.0 {
                return f64::INFINITY;
            }
            acc += sr / (er * er);
        }
        acc
    };
    let steps = (1.0 / resolution).round() as usize;
    match s.len() {
        1 => objective(&[eps / c[0]]),
        2 => {
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                let f = i as f64 / steps as f64;
                let eta = [eps * f / c[0], eps * (1.0 - f) / c[1]];
                best = best.min(objective(&eta));
            }
            best
        }
        _ => {
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                let f1 = i as f64 / steps as f64;
                for j in 0..=(steps - i) {
                    let f2 = j as f64 / steps as f64;
                    let f3 = 1.0 - f1 - f2;
                    let eta = [eps * f1 / c[0], eps * f2 / c[1], eps * f3 / c[2]];
                    best = best.min(objective(&eta));
                }
            }
            best
        }
    }
}

/// Grid minimization of 2 log(2/delta) sum s_r/eta_r^2 over the sphere
/// sum C_r^2 eta_r^2 = eps^2, for g <= 3. The budget fractions f_r split
/// eps^2 across groups.
pub fn grid_budget_search_approx(
    s: &[f64],
    c: &[f64],
    eps: f64,
    delta: f64,
    resolution: f64,
) -> f64 {
    assert!(s.len() == c.len() && !s.is_empty() && s.len() <= 3);
    let factor = 2.0 * (2.0 / delta).ln();
    let objective = |eta2: &[f64]| -> f64 {
        let mut acc = 0.0;
        for ((&sr, &er2), &cr) in s.iter().zip(eta2).zip(c) {
            if sr == 0.0 {
                continue;
            }
            // eta_r^2 = f_r eps^2 / c_r^2
            let e2 = er2 / (cr * cr);
            if e2 <= 0.0 {
                return f64::INFINITY;
            }
            acc += sr / e2;
        }
        factor * acc
    };
    let steps = (1.0 / resolution).round() as usize;
    let e2 = eps * eps;
    match s.len() {
        1 => objective(&[e2]),
        2 => {
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                let f = i as f64 / steps as f64;
                best = best.min(objective(&[e2 * f, e2 * (1.0 - f)]));
            }
            best
        }
        _ => {
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                let f1 = i as f64 / steps as f64;
                for j in 0..=(steps - i) {
                    let f2 = j as f64 / steps as f64;
                    let f3 = 1.0 - f1 - f2;
                    best = best.min(objective(&[e2 * f1, e2 * f2, e2 * f3]));
                }
            }
            best
        }
    }
}

/// Gauss-Jordan inversion with partial pivoting. Panics on singular input;
/// callers construct non-singular KKT systems.
fn invert(mat: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = mat.len();
    let mut a: Vec<Vec<f64>> = mat
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())
            .unwrap();
        assert!(a[pivot][col].abs() > 1e-12, "singular system in oracle");
        a.swap(col, pivot);
        let p = a[col][col];
        for v in &mut a[col] {
            *v /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f == 0.0 {
                continue;
            }
            for k in 0..2 * n {
                let sub = f * a[col][k];
                a[r][k] -= sub;
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

/// Minimum-variance recovery by explicit constrained optimization: for each
/// workload row q_i, minimize r^T Sigma r subject to S^T r = q_i via the
/// bordered KKT system, after reducing the constraints to an independent set
/// by pivoted elimination.
pub fn naive_gls(q: &DenseMatrix, s: &DenseMatrix, sigma: &[f64]) -> DenseMatrix {
    let n = s.cols();
    let m = s.rows();
    assert!(n <= 1 << 8, "oracle is cubic; keep N small");
    assert_eq!(q.cols(), n);
    assert_eq!(sigma.len(), m);
    // rows of the constraint system: (S^T)_j r = q_ij for j = 0..N.
    // reduce [S^T | I] to find independent constraint rows once.
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| s.get(i, j)).collect())
        .collect();
    let mut keep = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-10 * scale.max(1e-300);
    let mut rank = 0usize;
    for col in 0..m {
        if rank == n {
            break;
        }
        let Some(best) =
            (rank..n).max_by(|&p, &r| rows[p][col].abs().partial_cmp(&rows[r][col].abs()).unwrap())
        else {
            break;
        };
        if rows[best][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, best);
        order.swap(rank, best);
        let pivot_row = rows[rank].clone();
        let pivot = pivot_row[col];
        for r in rank + 1..n {
            let f = rows[r][col] / pivot;
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                rows[r][k] -= f * pivot_row[k];
            }
        }
        keep.push(order[rank]);
        rank += 1;
    }
    keep.sort_unstable();

    // KKT matrix: [2 Sigma, B^T; B, 0] with B the independent constraints.
    let k = keep.len();
    let dim = m + k;
    let mut kkt = vec![vec![0.0; dim]; dim];
    for i in 0..m {
        kkt[i][i] = 2.0 * sigma[i];
    }
    for (a, &j) in keep.iter().enumerate() {
        for i in 0..m {
            kkt[i][m + a] = s.get(i, j);
            kkt[m + a][i] = s.get(i, j);
        }
    }
    let inv = invert(&kkt);

    let mut out = DenseMatrix::zeros(q.rows(), m);
    for qi in 0..q.rows() {
        // rhs = (0 ... 0, q_i restricted to kept constraints)
        let mut r = vec![0.0; m];
        for (a, &j) in keep.iter().enumerate() {
            let rhs = q.get(qi, j);
            for (i, row) in r.iter_mut().enumerate() {
                *row += inv[i][m + a] * rhs;
            }
        }
        for (i, v) in r.iter().enumerate() {
            out.set(qi, i, *v);
        }
    }
    out
}

/// Plain Monte Carlo per-output sample variance of a seeded sampler.
pub fn empirical_variance<F>(mut sampler: F, trials: usize) -> Vec<f64>
where
    F: FnMut(u64) -> Vec<f64>,
{
    assert!(trials >= 2);
    let first = sampler(0);
    let q = first.len();
    let mut sum = vec![0.0f64; q];
    let mut sumsq = vec![0.0f64; q];
    for t in 0..trials {
        let v = if t == 0 {
            first.clone()
        } else {
            sampler(t as u64)
        };
        for i in 0..q {
            sum[i] += v[i];
            sumsq[i] += v[i] * v[i];
        }
    }
    let nt = trials as f64;
    (0..q)
        .map(|i| {
            let mean = sum[i] / nt;
            ((sumsq[i] - nt * mean * mean) / (nt - 1.0)).max(0.0)
        })
        .collect()
}
