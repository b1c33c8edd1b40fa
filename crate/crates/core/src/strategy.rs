//! Strategy matrices, their groupings, and the grouping checks that collapse
//! the per-column privacy constraints to one equation per group.

use crate::error::{Error, Result};
use crate::mask::{submasks_ascending, BitMask};
use crate::matrix::DenseMatrix;
use crate::transform::fwht;
use crate::vector::ContingencyVector;
use crate::workload::{MarginalSpec, Workload};

/// Relative tolerance for magnitude-equality checks. Strategies built here
/// use exact values from {0, +-1, +-2^{-d/2}}, so the default never binds.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-12;

/// Largest strategy (rows x columns) that `to_dense` will materialize.
const MAX_DENSE_ENTRIES: usize = 1 << 26;

#[derive(Debug, Clone)]
pub enum StrategyKind {
    /// Noisy base counts, S = I.
    Identity,
    /// Answer the workload's own marginals with noise, S = Q.
    WorkloadMarginals,
    /// One row per Fourier coefficient needed by the workload.
    Fourier,
    /// Binary tree of block sums over the linearized domain.
    Hierarchical,
    /// User-supplied strategy marginals; each workload marginal must be
    /// dominated by at least one of them.
    UserMarginals(Vec<MarginalSpec>),
    /// Arbitrary dense matrix; grouped greedily.
    DenseCustom(DenseMatrix),
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Identity => "identity",
            StrategyKind::WorkloadMarginals => "marginals",
            StrategyKind::Fourier => "fourier",
            StrategyKind::Hierarchical => "hierarchical",
            StrategyKind::UserMarginals(_) => "user-marginals",
            StrategyKind::DenseCustom(_) => "dense-custom",
        }
    }
}

#[derive(Debug, Clone)]
enum StrategyForm {
    Identity,
    /// Stacked marginal operators, rows in (marginal, ascending cell) order.
    Marginals(Vec<BitMask>),
    /// Fourier rows f^beta for the listed masks, ascending.
    Fourier(Vec<BitMask>),
    /// Block-sum rows for levels 0..=d; level l holds 2^l rows.
    Hierarchical,
    Dense(DenseMatrix),
}

#[derive(Debug, Clone)]
pub struct StrategyMatrix {
    d: u8,
    m: usize,
    form: StrategyForm,
    kind_name: &'static str,
}

/// Partition of strategy rows with per-group magnitude constants C_r.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    group_of: Vec<usize>,
    constants: Vec<f64>,
}

impl Grouping {
    pub fn new(group_of: Vec<usize>, constants: Vec<f64>) -> Result<Self> {
        let g = constants.len();
        if g == 0 || group_of.is_empty() {
            return Err(Error::Strategy("empty grouping".into()));
        }
        if group_of.iter().any(|&r| r >= g) {
            return Err(Error::Strategy("group id out of range".into()));
        }
        if constants.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Strategy("group constants must be positive".into()));
        }
        Ok(Grouping {
            group_of,
            constants,
        })
    }

    pub fn row_count(&self) -> usize {
        self.group_of.len()
    }

    pub fn group_count(&self) -> usize {
        self.constants.len()
    }

    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    /// Per-group sums s_r of a per-row vector.
    pub fn group_sums(&self, per_row: &[f64]) -> Result<Vec<f64>> {
        if per_row.len() != self.group_of.len() {
            return Err(Error::DimensionMismatch(format!(
                "grouping covers {} rows, vector has {}",
                self.group_of.len(),
                per_row.len()
            )));
        }
        let mut s = vec![0.0; self.group_count()];
        for (&r, &v) in self.group_of.iter().zip(per_row) {
            s[r] += v;
        }
        Ok(s)
    }
}

impl StrategyMatrix {
    pub fn dimension(&self) -> u8 {
        self.d
    }

    pub fn row_count(&self) -> usize {
        self.m
    }

    pub fn kind_name(&self) -> &'static str {
        self.kind_name
    }

    /// Fourier coefficient masks, when this is a Fourier strategy.
    pub fn fourier_masks(&self) -> Option<&[BitMask]> {
        match &self.form {
            StrategyForm::Fourier(masks) => Some(masks),
            _ => None,
        }
    }

    /// Strategy marginal masks, when this is a marginal-collection strategy.
    pub fn marginal_masks(&self) -> Option<&[BitMask]> {
        match &self.form {
            StrategyForm::Marginals(masks) => Some(masks),
            _ => None,
        }
    }

    /// Compute S x without materializing S.
    pub fn apply(&self, x: &ContingencyVector) -> Result<Vec<f64>> {
        if x.dimension() != self.d {
            return Err(Error::DimensionMismatch(
                "strategy and vector dimensions differ".into(),
            ));
        }
        match &self.form {
            StrategyForm::Identity => Ok(x.cells().to_vec()),
            StrategyForm::Marginals(masks) => {
                let mut out = Vec::with_capacity(self.m);
                for alpha in masks {
                    out.extend(crate::transform::compute_marginal(*alpha, x)?);
                }
                Ok(out)
            }
            StrategyForm::Fourier(masks) => {
                let coeffs = fwht(x);
                masks.iter().map(|b| coeffs.get(*b)).collect()
            }
            StrategyForm::Hierarchical => {
                let mut out = Vec::with_capacity(self.m);
                let n = x.len();
                for level in 0..=self.d {
                    let nodes = 1usize << level;
                    let block = n >> level;
                    for t in 0..nodes {
                        out.push(x.cells()[t * block..(t + 1) * block].iter().sum());
                    }
                }
                Ok(out)
            }
            StrategyForm::Dense(mat) => mat.matvec(x.cells()),
        }
    }

    /// Materialize the m x N matrix (guarded by size).
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let n = 1usize << self.d;
        if self.m.saturating_mul(n) > MAX_DENSE_ENTRIES {
            return Err(Error::Config(format!(
                "strategy of {} x {} entries is too large to materialize",
                self.m, n
            )));
        }
        match &self.form {
            StrategyForm::Identity => Ok(DenseMatrix::identity(n)),
            StrategyForm::Marginals(masks) => {
                let specs: Vec<MarginalSpec> =
                    masks.iter().map(|m| MarginalSpec::new(*m)).collect();
                Workload::marginals(specs)?.matrix(self.d)
            }
            StrategyForm::Fourier(masks) => {
                let scale = (-(self.d as f64) / 2.0).exp2();
                let mut out = DenseMatrix::zeros(self.m, n);
                for (r, beta) in masks.iter().enumerate() {
                    for j in 0..n {
                        let parity = (beta.bits() & j as u32).count_ones() % 2;
                        out.set(r, j, if parity == 0 { scale } else { -scale });
                    }
                }
                Ok(out)
            }
            StrategyForm::Hierarchical => {
                let mut out = DenseMatrix::zeros(self.m, n);
                let mut r = 0;
                for level in 0..=self.d {
                    let nodes = 1usize << level;
                    let block = n >> level;
                    for t in 0..nodes {
                        for j in t * block..(t + 1) * block {
                            out.set(r, j, 1.0);
                        }
                        r += 1;
                    }
                }
                Ok(out)
            }
            StrategyForm::Dense(mat) => Ok(mat.clone()),
        }
    }

    /// Max column L1 norm.
    pub fn l1_sensitivity(&self) -> f64 {
        match &self.form {
            StrategyForm::Identity => 1.0,
            StrategyForm::Marginals(masks) => masks.len() as f64,
            StrategyForm::Fourier(masks) => masks.len() as f64 * (-(self.d as f64) / 2.0).exp2(),
            StrategyForm::Hierarchical => (self.d + 1) as f64,
            StrategyForm::Dense(mat) => dense_l1_sensitivity(mat),
        }
    }

    /// Max column L2 norm.
    pub fn l2_sensitivity(&self) -> f64 {
        match &self.form {
            StrategyForm::Identity => 1.0,
            StrategyForm::Marginals(masks) => (masks.len() as f64).sqrt(),
            StrategyForm::Fourier(masks) => {
                (masks.len() as f64).sqrt() * (-(self.d as f64) / 2.0).exp2()
            }
            StrategyForm::Hierarchical => ((self.d + 1) as f64).sqrt(),
            StrategyForm::Dense(mat) => dense_l2_sensitivity(mat),
        }
    }

    /// max over columns j of sum_i |S_ij| eps_i. For marginal and hierarchical
    /// forms this collapses to a per-group sum of row maxima: exact whenever
    /// budgets are constant within each marginal/level (as every budgeting
    /// mode here produces), an upper bound otherwise.
    pub fn max_column_l1_weighted(&self, eps: &[f64]) -> Result<f64> {
        self.check_budget_len(eps)?;
        Ok(match &self.form {
            StrategyForm::Identity => eps.iter().cloned().fold(0.0, f64::max),
            StrategyForm::Marginals(masks) => {
                let mut total = 0.0;
                let mut r = 0;
                for alpha in masks {
                    let cells = 1usize << alpha.weight();
                    total += eps[r..r + cells].iter().cloned().fold(0.0, f64::max);
                    r += cells;
                }
                total
            }
            StrategyForm::Fourier(_) => (-(self.d as f64) / 2.0).exp2() * eps.iter().sum::<f64>(),
            StrategyForm::Hierarchical => {
                let mut total = 0.0;
                let mut r = 0;
                for level in 0..=self.d {
                    let nodes = 1usize << level;
                    total += eps[r..r + nodes].iter().cloned().fold(0.0, f64::max);
                    r += nodes;
                }
                total
            }
            StrategyForm::Dense(mat) => {
                let mut best: f64 = 0.0;
                for j in 0..mat.cols() {
                    let mut acc = 0.0;
                    for i in 0..mat.rows() {
                        acc += mat.get(i, j).abs() * eps[i];
                    }
                    best = best.max(acc);
                }
                best
            }
        })
    }

    /// max over columns j of sqrt(sum_i S_ij^2 eps_i^2); same collapsing rule
    /// as [`Self::max_column_l1_weighted`].
    pub fn max_column_l2_weighted(&self, eps: &[f64]) -> Result<f64> {
        self.check_budget_len(eps)?;
        Ok(match &self.form {
            StrategyForm::Identity => eps.iter().cloned().fold(0.0, f64::max),
            StrategyForm::Marginals(masks) => {
                let mut total = 0.0;
                let mut r = 0;
                for alpha in masks {
                    let cells = 1usize << alpha.weight();
                    let mx = eps[r..r + cells].iter().cloned().fold(0.0, f64::max);
                    total += mx * mx;
                    r += cells;
                }
                total.sqrt()
            }
            StrategyForm::Fourier(_) => {
                (-(self.d as f64) / 2.0).exp2() * eps.iter().map(|e| e * e).sum::<f64>().sqrt()
            }
            StrategyForm::Hierarchical => {
                let mut total = 0.0;
                let mut r = 0;
                for level in 0..=self.d {
                    let nodes = 1usize << level;
                    let mx = eps[r..r + nodes].iter().cloned().fold(0.0, f64::max);
                    total += mx * mx;
                    r += nodes;
                }
                total.sqrt()
            }
            StrategyForm::Dense(mat) => {
                let mut best: f64 = 0.0;
                for j in 0..mat.cols() {
                    let mut acc = 0.0;
                    for i in 0..mat.rows() {
                        let v = mat.get(i, j) * eps[i];
                        acc += v * v;
                    }
                    best = best.max(acc);
                }
                best.sqrt()
            }
        })
    }

    fn check_budget_len(&self, eps: &[f64]) -> Result<()> {
        if eps.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "budget vector length {} does not match {} strategy rows",
                eps.len(),
                self.m
            )));
        }
        Ok(())
    }

    /// Human-readable row labels for output files.
    pub fn row_labels(&self) -> Vec<String> {
        match &self.form {
            StrategyForm::Identity => (0..self.m).map(|j| format!("cell:{j}")).collect(),
            StrategyForm::Marginals(masks) => {
                let mut out = Vec::with_capacity(self.m);
                for alpha in masks {
                    for gamma in alpha.dominated() {
                        out.push(format!("marginal:{alpha}/cell:{gamma}"));
                    }
                }
                out
            }
            StrategyForm::Fourier(masks) => masks.iter().map(|b| format!("coeff:{b}")).collect(),
            StrategyForm::Hierarchical => {
                let mut out = Vec::with_capacity(self.m);
                for level in 0..=self.d {
                    for t in 0..(1usize << level) {
                        out.push(format!("level:{level}/node:{t}"));
                    }
                }
                out
            }
            StrategyForm::Dense(_) => (0..self.m).map(|i| format!("row:{i}")).collect(),
        }
    }
}

fn dense_l1_sensitivity(mat: &DenseMatrix) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..mat.cols() {
        let mut acc = 0.0;
        for i in 0..mat.rows() {
            acc += mat.get(i, j).abs();
        }
        best = best.max(acc);
    }
    best
}

fn dense_l2_sensitivity(mat: &DenseMatrix) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..mat.cols() {
        let mut acc = 0.0;
        for i in 0..mat.rows() {
            acc += mat.get(i, j) * mat.get(i, j);
        }
        best = best.max(acc);
    }
    best.sqrt()
}

/// The union of dominated masks over a marginal workload, deduplicated and
/// sorted ascending: the Fourier coefficient set F.
pub fn fourier_support(specs: &[MarginalSpec]) -> Vec<BitMask> {
    let d = specs[0].alpha.dimension();
    let mut seen = std::collections::BTreeSet::new();
    for s in specs {
        for sub in submasks_ascending(s.alpha.bits()) {
            seen.insert(sub);
        }
    }
    seen.into_iter()
        .map(|bits| BitMask::new(bits, d).expect("submask stays in range"))
        .collect()
}

/// Construct a strategy and its canonical grouping.
pub fn build_strategy(
    kind: &StrategyKind,
    workload: &Workload,
    d: u8,
) -> Result<(StrategyMatrix, Grouping)> {
    match kind {
        StrategyKind::Identity => {
            let n = 1usize << d;
            let s = StrategyMatrix {
                d,
                m: n,
                form: StrategyForm::Identity,
                kind_name: kind.name(),
            };
            let g = Grouping::new(vec![0; n], vec![1.0])?;
            Ok((s, g))
        }
        StrategyKind::WorkloadMarginals => {
            let specs = workload.marginal_specs().ok_or_else(|| {
                Error::Strategy("marginal strategy requires a marginal workload".into())
            })?;
            marginal_collection(specs.iter().map(|s| s.alpha).collect(), d, kind.name())
        }
        StrategyKind::UserMarginals(centroids) => {
            if centroids.is_empty() {
                return Err(Error::Strategy("no strategy marginals given".into()));
            }
            if let Some(specs) = workload.marginal_specs() {
                assign_to_centroids(specs, centroids)?;
            }
            marginal_collection(centroids.iter().map(|s| s.alpha).collect(), d, kind.name())
        }
        StrategyKind::Fourier => {
            let specs = workload.marginal_specs().ok_or_else(|| {
                Error::Strategy("fourier strategy requires a marginal workload".into())
            })?;
            let masks = fourier_support(specs);
            if masks[0].dimension() != d {
                return Err(Error::DimensionMismatch(
                    "workload dimension does not match d".into(),
                ));
            }
            let m = masks.len();
            let c = (-(d as f64) / 2.0).exp2();
            let s = StrategyMatrix {
                d,
                m,
                form: StrategyForm::Fourier(masks),
                kind_name: kind.name(),
            };
            let g = Grouping::new((0..m).collect(), vec![c; m])?;
            Ok((s, g))
        }
        StrategyKind::Hierarchical => {
            let m = (1usize << (d + 1)) - 1;
            let s = StrategyMatrix {
                d,
                m,
                form: StrategyForm::Hierarchical,
                kind_name: kind.name(),
            };
            let levels = d as usize + 1;
            let mut group_of = Vec::with_capacity(m);
            for level in 0..levels {
                group_of.extend(std::iter::repeat_n(level, 1usize << level));
            }
            let g = Grouping::new(group_of, vec![1.0; levels])?;
            Ok((s, g))
        }
        StrategyKind::DenseCustom(mat) => {
            if mat.cols() != 1usize << d {
                return Err(Error::DimensionMismatch(format!(
                    "custom strategy has {} columns, domain has {}",
                    mat.cols(),
                    1usize << d
                )));
            }
            let g = greedy_grouping(mat, DEFAULT_GROUPING_TOL)?;
            let s = StrategyMatrix {
                d,
                m: mat.rows(),
                form: StrategyForm::Dense(mat.clone()),
                kind_name: kind.name(),
            };
            Ok((s, g))
        }
    }
}

fn marginal_collection(
    masks: Vec<BitMask>,
    d: u8,
    kind_name: &'static str,
) -> Result<(StrategyMatrix, Grouping)> {
    if masks.iter().any(|m| m.dimension() != d) {
        return Err(Error::DimensionMismatch(
            "strategy marginal dimension does not match d".into(),
        ));
    }
    let mut group_of = Vec::new();
    for (r, alpha) in masks.iter().enumerate() {
        group_of.extend(std::iter::repeat_n(r, 1usize << alpha.weight()));
    }
    let m = group_of.len();
    let g = Grouping::new(group_of, vec![1.0; masks.len()])?;
    let s = StrategyMatrix {
        d,
        m,
        form: StrategyForm::Marginals(masks),
        kind_name,
    };
    Ok((s, g))
}

/// Assign each workload marginal to the first centroid that dominates it.
pub fn assign_to_centroids(
    workload: &[MarginalSpec],
    centroids: &[MarginalSpec],
) -> Result<Vec<usize>> {
    workload
        .iter()
        .map(|w| {
            centroids
                .iter()
                .position(|c| w.alpha.dominates_by(&c.alpha).unwrap_or(false))
                .ok_or_else(|| {
                    Error::Strategy(format!(
                        "workload marginal {} is not dominated by any strategy marginal",
                        w.alpha
                    ))
                })
        })
        .collect()
}

fn magnitudes_match(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Greedily group the rows of a dense matrix: rows are processed in
/// ascending order and join the lowest-id compatible group.
pub fn greedy_grouping(s: &DenseMatrix, tol: f64) -> Result<Grouping> {
    let (m, n) = (s.rows(), s.cols());
    if m == 0 {
        return Err(Error::NotGroupable("matrix has no rows".into()));
    }
    struct Group {
        constant: f64,
        occupied: Vec<bool>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut group_of = vec![0usize; m];
    for i in 0..m {
        // uniform nonzero magnitude of the row
        let mut mag: Option<f64> = None;
        for j in 0..n {
            let v = s.get(i, j).abs();
            if v == 0.0 {
                continue;
            }
            match mag {
                None => mag = Some(v),
                Some(c) if magnitudes_match(c, v, tol) => {}
                Some(c) => {
                    return Err(Error::NotGroupable(format!(
                        "row {i} mixes magnitudes {c} and {v}"
                    )));
                }
            }
        }
        let mag = mag.ok_or_else(|| Error::NotGroupable(format!("row {i} is all zeros")))?;
        let mut placed = false;
        'groups: for (gid, group) in groups.iter_mut().enumerate() {
            if !magnitudes_match(group.constant, mag, tol) {
                continue;
            }
            for j in 0..n {
                if s.get(i, j) != 0.0 && group.occupied[j] {
                    continue 'groups;
                }
            }
            for j in 0..n {
                if s.get(i, j) != 0.0 {
                    group.occupied[j] = true;
                }
            }
            group_of[i] = gid;
            placed = true;
            break;
        }
        if !placed {
            let mut occupied = vec![false; n];
            for j in 0..n {
                if s.get(i, j) != 0.0 {
                    occupied[j] = true;
                }
            }
            group_of[i] = groups.len();
            groups.push(Group {
                constant: mag,
                occupied,
            });
        }
    }
    Grouping::new(group_of, groups.into_iter().map(|g| g.constant).collect())
}

/// Check the two grouping conditions: rows of one group never share a
/// non-zero column, and every non-zero in group r has magnitude C_r.
pub fn verify_grouping(s: &DenseMatrix, grouping: &Grouping, tol: f64) -> bool {
    let (m, n) = (s.rows(), s.cols());
    if grouping.row_count() != m {
        return false;
    }
    let g = grouping.group_count();
    let mut occupied = vec![vec![false; n]; g];
    for i in 0..m {
        let r = grouping.group_of()[i];
        let c_r = grouping.constants()[r];
        for j in 0..n {
            let v = s.get(i, j);
            if v == 0.0 {
                continue;
            }
            if occupied[r][j] {
                return false;
            }
            occupied[r][j] = true;
            if !magnitudes_match(v.abs(), c_r, tol) {
                return false;
            }
        }
    }
    true
}

/// True iff the b-vector is constant within every group (relative tol):
/// the condition under which the grouped budget solution is optimal.
pub fn recovery_consistent_with_grouping(b: &[f64], grouping: &Grouping, tol: f64) -> bool {
    if b.len() != grouping.row_count() {
        return false;
    }
    let g = grouping.group_count();
    let mut seen: Vec<Option<f64>> = vec![None; g];
    for (i, &r) in grouping.group_of().iter().enumerate() {
        match seen[r] {
            None => seen[r] = Some(b[i]),
            Some(first) => {
                if (first - b[i]).abs() > tol * first.abs().max(b[i].abs()).max(1e-300) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{demo_vector, demo_workload};

    fn m(s: &str) -> BitMask {
        BitMask::from_binary_str(s).unwrap()
    }

    #[test]
    fn demo_strategy_grouping_numbers() {
        let w = demo_workload();
        // the strategy holding only the a,b marginal has one group
        let user = StrategyKind::UserMarginals(vec![MarginalSpec::new(m("110"))]);
        let (s, g) = build_strategy(&user, &w, 3).unwrap();
        assert_eq!(s.row_count(), 4);
        assert_eq!(g.group_count(), 1);
        assert_eq!(g.constants(), &[1.0]);

        // the workload used as its own strategy groups per marginal
        let (s, g) = build_strategy(&StrategyKind::WorkloadMarginals, &w, 3).unwrap();
        assert_eq!(s.row_count(), 6);
        assert_eq!(g.group_count(), 2);
        assert_eq!(g.constants(), &[1.0, 1.0]);
        assert!(verify_grouping(&s.to_dense().unwrap(), &g, 1e-12));
    }

    #[test]
    fn fourier_support_for_one_way_workload() {
        let w = Workload::marginals(vec![
            MarginalSpec::new(m("001")),
            MarginalSpec::new(m("010")),
            MarginalSpec::new(m("100")),
        ])
        .unwrap();
        let (s, g) = build_strategy(&StrategyKind::Fourier, &w, 3).unwrap();
        assert_eq!(s.row_count(), 4); // 000, 001, 010, 100
        assert_eq!(g.group_count(), 4);
        let c = (-1.5f64).exp2();
        assert!(g.constants().iter().all(|&v| (v - c).abs() < 1e-15));
        let masks: Vec<u32> = s
            .fourier_masks()
            .unwrap()
            .iter()
            .map(|b| b.bits())
            .collect();
        assert_eq!(masks, vec![0b000, 0b001, 0b010, 0b100]);
    }

    #[test]
    fn greedy_matches_canonical_group_counts() {
        let w = demo_workload();
        let q = w.matrix(3).unwrap();
        let g = greedy_grouping(&q, 1e-12).unwrap();
        assert_eq!(g.group_count(), 2);
        assert!(verify_grouping(&q, &g, 1e-12));

        let id = DenseMatrix::identity(8);
        assert_eq!(greedy_grouping(&id, 1e-12).unwrap().group_count(), 1);
    }

    #[test]
    fn greedy_rejects_mixed_magnitude_rows() {
        let s = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            greedy_grouping(&s, 1e-12),
            Err(Error::NotGroupable(_))
        ));
    }

    #[test]
    fn verify_rejects_overlapping_rows_in_group() {
        let q = demo_workload().matrix(3).unwrap();
        // rows 0 and 2 share column 0
        let bad = Grouping::new(vec![0, 1, 0, 1, 1, 1], vec![1.0, 1.0]).unwrap();
        assert!(!verify_grouping(&q, &bad, 1e-12));
    }

    #[test]
    fn singleton_groups_of_uniform_rows_verify() {
        let s = DenseMatrix::from_rows(&[vec![0.5, 0.0, -0.5], vec![0.0, 2.0, 0.0]]).unwrap();
        let g = Grouping::new(vec![0, 1], vec![0.5, 2.0]).unwrap();
        assert!(verify_grouping(&s, &g, 1e-12));
    }

    #[test]
    fn hierarchical_levels() {
        let w = demo_workload();
        let (s, g) = build_strategy(&StrategyKind::Hierarchical, &w, 3).unwrap();
        assert_eq!(s.row_count(), 15);
        assert_eq!(g.group_count(), 4); // levels 0..=3
        let dense = s.to_dense().unwrap();
        assert!(verify_grouping(&dense, &g, 1e-12));
        // level sums applied to the demo vector
        let z = s.apply(&demo_vector()).unwrap();
        assert_eq!(z[0], 5.0); // root
        assert_eq!(&z[1..3], &[4.0, 1.0]); // halves
    }

    #[test]
    fn apply_matches_dense_multiply() {
        let w = demo_workload();
        let x = demo_vector();
        for kind in [
            StrategyKind::Identity,
            StrategyKind::WorkloadMarginals,
            StrategyKind::Fourier,
            StrategyKind::Hierarchical,
        ] {
            let (s, _) = build_strategy(&kind, &w, 3).unwrap();
            let fast = s.apply(&x).unwrap();
            let dense = s.to_dense().unwrap().matvec(x.cells()).unwrap();
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-12, "kind {}", s.kind_name());
            }
        }
    }

    #[test]
    fn sensitivities() {
        let w = demo_workload();
        let (q, _) = build_strategy(&StrategyKind::WorkloadMarginals, &w, 3).unwrap();
        assert_eq!(q.l1_sensitivity(), 2.0);
        assert!((q.l2_sensitivity() - 2.0f64.sqrt()).abs() < 1e-15);
        let (id, _) = build_strategy(&StrategyKind::Identity, &w, 3).unwrap();
        assert_eq!(id.l1_sensitivity(), 1.0);
        assert_eq!(id.l2_sensitivity(), 1.0);
        // fourier; full basis has unit column norms
        let full = Workload::marginals(vec![MarginalSpec::new(m("111"))]).unwrap();
        let (f, _) = build_strategy(&StrategyKind::Fourier, &full, 3).unwrap();
        assert_eq!(f.row_count(), 8);
        assert!((f.l2_sensitivity() - 1.0).abs() < 1e-12);
        assert!((f.l1_sensitivity() - 8.0 * (-1.5f64).exp2()).abs() < 1e-12);
        // structured sensitivities agree with the dense definition
        for s in [&q, &f] {
            let dense = s.to_dense().unwrap();
            assert!((dense_l1_sensitivity(&dense) - s.l1_sensitivity()).abs() < 1e-12);
            assert!((dense_l2_sensitivity(&dense) - s.l2_sensitivity()).abs() < 1e-12);
        }
    }

    #[test]
    fn group_columns_hold_at_most_one_nonzero() {
        // exhaustive structural check at small d for every built-in kind
        let w = demo_workload();
        for kind in [
            StrategyKind::Identity,
            StrategyKind::WorkloadMarginals,
            StrategyKind::Fourier,
            StrategyKind::Hierarchical,
        ] {
            let (s, g) = build_strategy(&kind, &w, 3).unwrap();
            let dense = s.to_dense().unwrap();
            for r in 0..g.group_count() {
                for j in 0..dense.cols() {
                    let nonzeros = (0..dense.rows())
                        .filter(|&i| g.group_of()[i] == r && dense.get(i, j) != 0.0)
                        .count();
                    assert!(nonzeros <= 1);
                }
            }
        }
    }

    #[test]
    fn b_consistency_check() {
        let g = Grouping::new(vec![0, 0, 1, 1], vec![1.0, 1.0]).unwrap();
        assert!(recovery_consistent_with_grouping(
            &[2.0, 2.0, 4.0, 4.0],
            &g,
            1e-9
        ));
        assert!(!recovery_consistent_with_grouping(
            &[1.0, 2.0, 4.0, 4.0],
            &g,
            1e-9
        ));
    }

    #[test]
    fn centroid_assignment() {
        let w = [MarginalSpec::new(m("100")), MarginalSpec::new(m("010"))];
        let c = [MarginalSpec::new(m("110"))];
        assert_eq!(assign_to_centroids(&w, &c).unwrap(), vec![0, 0]);
        let uncovered = [MarginalSpec::new(m("001"))];
        assert!(assign_to_centroids(&uncovered, &c).is_err());
    }
}
