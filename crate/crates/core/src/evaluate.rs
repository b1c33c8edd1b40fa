//! Error metrics, the Monte Carlo harness, theoretical bound formulas, and
//! the strategy-comparison runner.

use std::time::Instant;

use crate::budget::binomial;
use crate::error::{Error, Result};
use crate::mechanism::PrivacySpec;
use crate::pipeline::{self, PipelineConfig, PreparedPipeline};
use crate::vector::ContingencyVector;
use crate::workload::Workload;

/// Per-marginal and total error figures from a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// Mean |answer - truth| per entry, one figure per marginal.
    pub per_marginal_abs: Vec<f64>,
    /// The same scaled by the marginal's mean true answer; None when the
    /// marginal's true mean is zero.
    pub per_marginal_rel: Vec<Option<f64>>,
    pub total_variance_predicted: f64,
    pub total_variance_empirical: f64,
    pub trials: usize,
    pub seed: u64,
}

/// splitmix64 step, used to derive independent per-trial seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Kahan-compensated accumulator, so aggregation is deterministic and
/// order-stable.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Run the prepared pipeline `trials` times with derived seeds, measuring the
/// final answers (consistent ones when the pipeline produces them).
pub fn measure(
    prepared: &PreparedPipeline,
    x: &ContingencyVector,
    trials: usize,
    seed: u64,
) -> Result<ErrorReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let truth = prepared.true_answers(x)?;
    let spans = prepared.workload().entry_spans();
    let a = prepared.workload().weights();
    let q = truth.len();
    let mut abs_err = vec![Kahan::default(); q];
    let mut sum = vec![Kahan::default(); q];
    let mut sumsq = vec![Kahan::default(); q];
    for t in 0..trials {
        let bundle = prepared.run(x, derive_seed(seed, t as u64))?;
        let answers = bundle.consistent.as_ref().unwrap_or(&bundle.y);
        for i in 0..q {
            let v = answers[i];
            abs_err[i].add((v - truth[i]).abs());
            sum[i].add(v);
            sumsq[i].add(v * v);
        }
    }
    let nt = trials as f64;
    let mut per_marginal_abs = Vec::with_capacity(spans.len());
    let mut per_marginal_rel = Vec::with_capacity(spans.len());
    for span in &spans {
        let entries = span.len() as f64;
        let mean_abs: f64 = span.clone().map(|i| abs_err[i].value()).sum::<f64>() / (entries * nt);
        per_marginal_abs.push(mean_abs);
        let mean_truth: f64 = span.clone().map(|i| truth[i]).sum::<f64>() / entries;
        per_marginal_rel.push(if mean_truth != 0.0 {
            Some(mean_abs / mean_truth)
        } else {
            None
        });
    }
    // a-weighted total of per-entry sample variances
    let mut total_emp = Kahan::default();
    if trials > 1 {
        for i in 0..q {
            let mean = sum[i].value() / nt;
            let var = (sumsq[i].value() - nt * mean * mean) / (nt - 1.0);
            total_emp.add(a[i] * var.max(0.0));
        }
    }
    Ok(ErrorReport {
        per_marginal_abs,
        per_marginal_rel,
        total_variance_predicted: prepared.predicted_total_variance(),
        total_variance_empirical: total_emp.value(),
        trials,
        seed,
    })
}

/// Jensen upper bound on the expected absolute error of each entry:
/// sqrt of the predicted per-entry variance.
pub fn expected_entry_errors(prepared: &PreparedPipeline) -> Vec<f64> {
    prepared
        .predicted_entry_variance()
        .iter()
        .map(|v| v.sqrt())
        .collect()
}

/// Mean of [`expected_entry_errors`] over all entries: the analytic
/// per-entry expected error of the pipeline.
pub fn analytic_expected_entry_error(prepared: &PreparedPipeline) -> f64 {
    let e = expected_entry_errors(prepared);
    e.iter().sum::<f64>() / e.len() as f64
}

/// Analytic expected L1 error per marginal (Jensen): the sum of
/// [`expected_entry_errors`] within each marginal's span.
pub fn analytic_expected_marginal_l1(prepared: &PreparedPipeline) -> Vec<f64> {
    let e = expected_entry_errors(prepared);
    prepared
        .workload()
        .entry_spans()
        .iter()
        .map(|span| span.clone().map(|i| e[i]).sum())
        .collect()
}

/// Explicit-constant form of the pure-mode error bound for the non-uniform
/// Fourier mechanism on the all-k-way workload: expected L1 noise per
/// marginal is at most (k+1) sqrt(6 C(d,k) C(d+k,k)) / eps.
pub fn bound_kway_pure(d: u8, k: u8, eps: f64) -> Result<f64> {
    check_kway_args(d, k, eps)?;
    let (df, kf) = (d as u64, k as u64);
    Ok((k as f64 + 1.0) * (6.0 * binomial(df, kf) * binomial(df + kf, kf)).sqrt() / eps)
}

/// Approx-mode analog: expected L1 noise per marginal is at most
/// 2 sqrt(2 (k+1) log(2/delta) C(d+k,k)) / eps.
pub fn bound_kway_approx(d: u8, k: u8, eps: f64, delta: f64) -> Result<f64> {
    check_kway_args(d, k, eps)?;
    if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(Error::Privacy(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    let (df, kf) = (d as u64, k as u64);
    Ok(2.0 * (2.0 * (k as f64 + 1.0) * (2.0 / delta).ln() * binomial(df + kf, kf)).sqrt() / eps)
}

fn check_kway_args(d: u8, k: u8, eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Privacy(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    if 2 * k > d {
        return Err(Error::Config(format!(
            "the k-way bounds require k <= d/2, got k = {k}, d = {d}"
        )));
    }
    Ok(())
}

/// Expected L1 noise per marginal of the uniform-budget Fourier release:
/// |B| sqrt(2^(3 + ||alpha||)) / eps.
pub fn bound_fourier_uniform(alpha_weight: u32, b_size: usize, eps: f64) -> f64 {
    b_size as f64 * ((3 + alpha_weight) as f64).exp2().sqrt() / eps
}

/// One row of a comparison table.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub name: String,
    pub report: ErrorReport,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub rows: Vec<CompareRow>,
}

impl ComparisonTable {
    /// Deterministic CSV (no wall-clock column): byte-identical across runs
    /// with the same seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "config,trials,seed,total_variance_predicted,total_variance_empirical,mean_abs_error,mean_rel_error\n",
        );
        for row in &self.rows {
            let r = &row.report;
            let mean_abs = r.per_marginal_abs.iter().sum::<f64>() / r.per_marginal_abs.len() as f64;
            let rels: Vec<f64> = r.per_marginal_rel.iter().flatten().cloned().collect();
            let mean_rel = if rels.is_empty() {
                String::from("n/a")
            } else {
                format!("{}", rels.iter().sum::<f64>() / rels.len() as f64)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.name,
                r.trials,
                r.seed,
                r.total_variance_predicted,
                r.total_variance_empirical,
                mean_abs,
                mean_rel
            ));
        }
        out
    }
}

impl std::fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<16} {:>14} {:>14} {:>12} {:>10}",
            "config", "predicted-var", "empirical-var", "mean-abs", "wall-ms"
        )?;
        for row in &self.rows {
            let r = &row.report;
            let mean_abs = r.per_marginal_abs.iter().sum::<f64>() / r.per_marginal_abs.len() as f64;
            writeln!(
                f,
                "{:<16} {:>14.4} {:>14.4} {:>12.4} {:>10.1}",
                row.name,
                r.total_variance_predicted,
                r.total_variance_empirical,
                mean_abs,
                row.wall_ms
            )?;
        }
        Ok(())
    }
}

/// Measure every named configuration against the same data, workload, spec
/// and seed.
pub fn compare(
    configs: &[(String, PipelineConfig)],
    x: &ContingencyVector,
    workload: &Workload,
    spec: PrivacySpec,
    trials: usize,
    seed: u64,
) -> Result<ComparisonTable> {
    if configs.is_empty() {
        return Err(Error::Config("no configurations to compare".into()));
    }
    let mut rows = Vec::with_capacity(configs.len());
    for (name, config) in configs {
        let start = Instant::now();
        let prepared = pipeline::prepare(config.clone(), workload, x.dimension(), spec)?;
        let report = measure(&prepared, x, trials, seed)?;
        rows.push(CompareRow {
            name: name.clone(),
            report,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(ComparisonTable { rows })
}

/// Synthetic data generators.
pub mod synth {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, Gamma};

    use crate::error::{Error, Result};
    use crate::vector::ContingencyVector;

    /// Multinomial counts over 2^d cells with cell probabilities drawn from a
    /// symmetric Dirichlet(concentration).
    pub fn dirichlet_multinomial(
        d: u8,
        records: usize,
        concentration: f64,
        seed: u64,
    ) -> Result<ContingencyVector> {
        if !(concentration.is_finite() && concentration > 0.0) {
            return Err(Error::Config("concentration must be positive".into()));
        }
        let n = 1usize << d;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let gamma =
            Gamma::new(concentration, 1.0).map_err(|e| Error::Config(format!("gamma: {e}")))?;
        let mut weights: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng).max(1e-300)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        // cumulative inverse-CDF sampling
        let mut cum = Vec::with_capacity(n);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cum.push(acc);
        }
        let mut cells = vec![0.0; n];
        for _ in 0..records {
            let u: f64 = rng.random();
            let idx = cum.partition_point(|&c| c < u).min(n - 1);
            cells[idx] += 1.0;
        }
        ContingencyVector::from_cells(d, cells)
    }

    /// Independent binary attributes: attribute i is 1 with probability `p[i]`.
    pub fn product_bernoulli(
        d: u8,
        records: usize,
        p: &[f64],
        seed: u64,
    ) -> Result<ContingencyVector> {
        if p.len() != d as usize {
            return Err(Error::Config(format!(
                "need {d} attribute probabilities, got {}",
                p.len()
            )));
        }
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("probabilities must lie in [0,1]".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut x = ContingencyVector::zeros(d)?;
        for _ in 0..records {
            let mut cell = 0u32;
            for (i, &pi) in p.iter().enumerate() {
                if rng.random::<f64>() < pi {
                    // attribute 0 is the most significant bit
                    cell |= 1 << (d as usize - 1 - i);
                }
            }
            x.add_at(cell);
        }
        Ok(x)
    }
}
