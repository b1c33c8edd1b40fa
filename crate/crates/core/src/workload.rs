//! Query workloads: collections of marginals, or an arbitrary dense stack of
//! linear queries.

use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::{submasks_ascending, BitMask};
use crate::matrix::DenseMatrix;
use crate::schema::AttributeSchema;

/// One marginal C^alpha, identified by its attribute-subset mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MarginalSpec {
    pub alpha: BitMask,
}

impl MarginalSpec {
    pub fn new(alpha: BitMask) -> Self {
        MarginalSpec { alpha }
    }

    /// Number of cells in the marginal, 2^||alpha||.
    pub fn cell_count(&self) -> usize {
        1usize << self.alpha.weight()
    }
}

#[derive(Debug, Clone)]
pub enum WorkloadKind {
    MarginalSet(Vec<MarginalSpec>),
    DenseLinear(DenseMatrix),
}

#[derive(Debug, Clone)]
pub struct Workload {
    kind: WorkloadKind,
    weight: Option<Vec<f64>>,
}

impl Workload {
    pub fn marginals(specs: Vec<MarginalSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Workload("workload has no marginals".into()));
        }
        let d = specs[0].alpha.dimension();
        for s in &specs {
            if s.alpha.dimension() != d {
                return Err(Error::DimensionMismatch(
                    "marginals have differing dimensions".into(),
                ));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for s in &specs {
            if !seen.insert(s.alpha.bits()) {
                return Err(Error::Workload(format!(
                    "duplicate marginal {} in workload",
                    s.alpha
                )));
            }
        }
        Ok(Workload {
            kind: WorkloadKind::MarginalSet(specs),
            weight: None,
        })
    }

    pub fn dense(matrix: DenseMatrix) -> Result<Self> {
        if matrix.rows() == 0 {
            return Err(Error::Workload("dense workload has no rows".into()));
        }
        Ok(Workload {
            kind: WorkloadKind::DenseLinear(matrix),
            weight: None,
        })
    }

    /// Attach a per-query weight vector a (length q, non-negative, finite).
    pub fn with_weight(mut self, weight: Vec<f64>) -> Result<Self> {
        if weight.len() != self.query_count() {
            return Err(Error::Workload(format!(
                "weight vector length {} does not match q = {}",
                weight.len(),
                self.query_count()
            )));
        }
        if weight.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Workload(
                "weights must be non-negative and finite".into(),
            ));
        }
        self.weight = Some(weight);
        Ok(self)
    }

    pub fn kind(&self) -> &WorkloadKind {
        &self.kind
    }

    pub fn marginal_specs(&self) -> Option<&[MarginalSpec]> {
        match &self.kind {
            WorkloadKind::MarginalSet(specs) => Some(specs),
            WorkloadKind::DenseLinear(_) => None,
        }
    }

    /// Total number of query rows q.
    pub fn query_count(&self) -> usize {
        match &self.kind {
            WorkloadKind::MarginalSet(specs) => specs.iter().map(|s| s.cell_count()).sum(),
            WorkloadKind::DenseLinear(m) => m.rows(),
        }
    }

    /// The weight vector a, defaulting to all ones.
    pub fn weights(&self) -> Vec<f64> {
        match &self.weight {
            Some(w) => w.clone(),
            None => vec![1.0; self.query_count()],
        }
    }

    /// Row ranges of each marginal within the stacked query vector.
    #[allow(clippy::single_range_in_vec_init)]
    pub fn entry_spans(&self) -> Vec<std::ops::Range<usize>> {
        match &self.kind {
            WorkloadKind::MarginalSet(specs) => {
                let mut spans = Vec::with_capacity(specs.len());
                let mut start = 0usize;
                for s in specs {
                    let end = start + s.cell_count();
                    spans.push(start..end);
                    start = end;
                }
                spans
            }
            WorkloadKind::DenseLinear(m) => vec![0..m.rows()],
        }
    }

    /// Materialize the q x N query matrix. Marginal rows are ordered by
    /// (marginal order, ascending cell submask order).
    pub fn matrix(&self, d: u8) -> Result<DenseMatrix> {
        match &self.kind {
            WorkloadKind::DenseLinear(m) => {
                if m.cols() != 1usize << d {
                    return Err(Error::DimensionMismatch(format!(
                        "dense workload has {} columns, domain has {}",
                        m.cols(),
                        1usize << d
                    )));
                }
                Ok(m.clone())
            }
            WorkloadKind::MarginalSet(specs) => {
                let n = 1usize
                    .checked_shl(d as u32)
                    .ok_or(Error::DimensionTooLarge(d))?;
                let q = self.query_count();
                if q.checked_mul(n).is_none() {
                    return Err(Error::DimensionTooLarge(d));
                }
                let mut out = DenseMatrix::zeros(q, n);
                let mut r = 0usize;
                for s in specs {
                    if s.alpha.dimension() != d {
                        return Err(Error::DimensionMismatch(
                            "marginal dimension does not match schema".into(),
                        ));
                    }
                    let alpha = s.alpha.bits();
                    for gamma in submasks_ascending(alpha) {
                        for j in 0..n {
                            if (j as u32) & alpha == gamma {
                                out.set(r, j, 1.0);
                            }
                        }
                        r += 1;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Parse a workload spec file: one marginal per line, given either as a
/// comma-separated list of attribute names, the keyword `total` for the
/// empty marginal, or `mask:<bits>` with a d-character binary string.
/// An optional trailing `weight=<w>` token weights every row of that
/// marginal. `#` starts a comment.
pub fn parse_workload(text: &str, schema: &AttributeSchema, file: &str) -> Result<Workload> {
    let mut specs = Vec::new();
    let mut weights: Vec<(usize, f64)> = Vec::new(); // (marginal index, weight)
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens: Vec<&str> = line.split_whitespace().collect();
        let mut weight = None;
        if let Some(last) = tokens.last() {
            if let Some(w) = last.strip_prefix("weight=") {
                weight = Some(w.parse::<f64>().map_err(|_| Error::Parse {
                    file: file.into(),
                    line: lineno + 1,
                    message: format!("invalid weight '{w}'"),
                })?);
                tokens.pop();
            }
        }
        if tokens.is_empty() {
            return Err(Error::Parse {
                file: file.into(),
                line: lineno + 1,
                message: "missing marginal specification".into(),
            });
        }
        let body = tokens.join(" ");
        let alpha = parse_marginal(&body, schema).map_err(|e| Error::Parse {
            file: file.into(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if let Some(w) = weight {
            weights.push((specs.len(), w));
        }
        specs.push(MarginalSpec::new(alpha));
    }
    let workload = Workload::marginals(specs)?;
    if weights.is_empty() {
        return Ok(workload);
    }
    let spans = workload.entry_spans();
    let mut a = vec![1.0; workload.query_count()];
    for (idx, w) in weights {
        for r in spans[idx].clone() {
            a[r] = w;
        }
    }
    workload.with_weight(a)
}

/// Parse a single marginal description (see [`parse_workload`]).
pub fn parse_marginal(body: &str, schema: &AttributeSchema) -> Result<BitMask> {
    let body = body.trim();
    if body.eq_ignore_ascii_case("total") {
        return BitMask::zero(schema.dimension());
    }
    if let Some(bits) = body.strip_prefix("mask:") {
        let mask = BitMask::from_binary_str(bits.trim())?;
        if mask.dimension() != schema.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "mask '{bits}' has {} bits, schema has d = {}",
                bits.trim().len(),
                schema.dimension()
            )));
        }
        return Ok(mask);
    }
    let names: Vec<&str> = body
        .split([',', ' '])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    schema.marginal_mask(&names)
}

pub fn load_workload(path: &Path, schema: &AttributeSchema) -> Result<Workload> {
    let text = std::fs::read_to_string(path)?;
    parse_workload(&text, schema, &path.display().to_string())
}
