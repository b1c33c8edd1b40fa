//! One pass of the release framework: build the strategy and its grouping,
//! budget the noise, release, recover, and optionally make the answers
//! consistent. Preparation is data-independent so the same prepared pipeline
//! can be run for many trials or datasets.

use crate::budget::{self, BudgetProblem, BudgetSolution};
use crate::consistency::{self, FourierRecoverySystem};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::mechanism::{self, NoisyAnswer, PrivacySpec};
use crate::recovery::{self, RecoveryMatrix, RecoverySource, ReleaseBundle, ReleaseMetadata};
use crate::strategy::{self, Grouping, StrategyKind, StrategyMatrix};
use crate::vector::ContingencyVector;
use crate::workload::{Workload, WorkloadKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetMode {
    Uniform,
    Optimal,
}

impl BudgetMode {
    pub fn name(&self) -> &'static str {
        match self {
            BudgetMode::Uniform => "uniform",
            BudgetMode::Optimal => "optimal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryMode {
    /// The strategy's canonical recovery (identity, aggregation, or the
    /// Fourier reconstruction matrix).
    Natural,
    /// Recompute the recovery by generalized least squares after budgeting.
    Gls,
}

impl RecoveryMode {
    pub fn name(&self) -> &'static str {
        match self {
            RecoveryMode::Natural => "natural",
            RecoveryMode::Gls => "gls",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub strategy: StrategyKind,
    pub budget: BudgetMode,
    pub recovery: RecoveryMode,
    pub consistency: bool,
    pub noiseless: bool,
}

/// A fully budgeted pipeline, ready to run against data.
pub struct PreparedPipeline {
    d: u8,
    config: PipelineConfig,
    workload: Workload,
    spec: PrivacySpec,
    strategy: StrategyMatrix,
    grouping: Grouping,
    budget: BudgetSolution,
    recovery: RecoveryMatrix,
    fourier_system: Option<FourierRecoverySystem>,
    dense_workload: Option<DenseMatrix>,
    predicted_entry_variance: Vec<f64>,
    predicted_total_variance: f64,
}

/// The natural recovery matrix of a strategy, where one exists.
fn natural_recovery(
    kind: &StrategyKind,
    workload: &Workload,
    d: u8,
) -> Result<Option<(RecoveryMatrix, Option<FourierRecoverySystem>)>> {
    match kind {
        StrategyKind::Identity => {
            let q = workload.matrix(d)?;
            Ok(Some((
                RecoveryMatrix::new(q, RecoverySource::Orthonormal),
                None,
            )))
        }
        StrategyKind::WorkloadMarginals => {
            let q = workload.query_count();
            Ok(Some((
                RecoveryMatrix::new(DenseMatrix::identity(q), RecoverySource::UserSupplied),
                None,
            )))
        }
        StrategyKind::Fourier => {
            let specs = workload.marginal_specs().ok_or_else(|| {
                Error::Strategy("fourier strategy requires a marginal workload".into())
            })?;
            let sys = consistency::build_fourier_system(specs, d)?;
            let r = RecoveryMatrix::new(sys.matrix().clone(), RecoverySource::FourierNatural);
            Ok(Some((r, Some(sys))))
        }
        StrategyKind::UserMarginals(centroids) => {
            let specs = workload.marginal_specs().ok_or_else(|| {
                Error::Strategy("marginal strategy requires a marginal workload".into())
            })?;
            let assignment = strategy::assign_to_centroids(specs, centroids)?;
            // centroid column offsets within the stacked strategy rows
            let mut offsets = Vec::with_capacity(centroids.len());
            let mut m = 0usize;
            for c in centroids {
                offsets.push(m);
                m += c.cell_count();
            }
            let q = workload.query_count();
            let mut r = DenseMatrix::zeros(q, m);
            let mut row = 0usize;
            for (w, &cidx) in specs.iter().zip(&assignment) {
                let centroid = centroids[cidx].alpha;
                for gamma in w.alpha.dominated() {
                    for (k, delta) in centroid.dominated().enumerate() {
                        if delta.meet(&w.alpha)? == gamma {
                            r.set(row, offsets[cidx] + k, 1.0);
                        }
                    }
                    row += 1;
                }
            }
            Ok(Some((
                RecoveryMatrix::new(r, RecoverySource::UserSupplied),
                None,
            )))
        }
        StrategyKind::Hierarchical | StrategyKind::DenseCustom(_) => Ok(None),
    }
}

pub fn prepare(
    config: PipelineConfig,
    workload: &Workload,
    d: u8,
    spec: PrivacySpec,
) -> Result<PreparedPipeline> {
    let (strategy, grouping) = strategy::build_strategy(&config.strategy, workload, d)?;
    let a = workload.weights();

    // initial recovery for budgeting
    let natural = natural_recovery(&config.strategy, workload, d)?;
    let (initial_r, mut fourier_system) = match natural {
        Some((r, sys)) => (r, sys),
        None => {
            // no canonical recovery: initialize from GLS at uniform variances
            let q = workload.matrix(d)?;
            let sd = strategy.to_dense()?;
            let sigma: Vec<Option<f64>> = vec![Some(1.0); sd.rows()];
            (recovery::gls_recovery(&q, &sd, &sigma)?, None)
        }
    };

    let b = budget::compute_b(&initial_r.matrix, &a)?;
    let problem = BudgetProblem::new(b, grouping.clone(), spec)?;
    let budget = match config.budget {
        BudgetMode::Uniform => budget::uniform_budget(&problem)?,
        BudgetMode::Optimal => budget::solve_optimal(&problem)?,
    };

    // final recovery
    let recovery = match config.recovery {
        RecoveryMode::Natural => initial_r,
        RecoveryMode::Gls => {
            let q = workload.matrix(d)?;
            let sd = strategy.to_dense()?;
            recovery::gls_recovery(&q, &sd, &budget.sigma_diag)?
        }
    };

    if config.consistency {
        if let WorkloadKind::MarginalSet(specs) = workload.kind() {
            if fourier_system.is_none() {
                fourier_system = Some(consistency::build_fourier_system(specs, d)?);
            }
        }
    }
    let dense_workload = match workload.kind() {
        WorkloadKind::DenseLinear(m) if config.consistency => Some(m.clone()),
        _ => None,
    };

    let (predicted_entry_variance, predicted_total_variance) =
        recovery::predicted_variance(&recovery.matrix, &budget.sigma_diag, &a)?;

    Ok(PreparedPipeline {
        d,
        config,
        workload: workload.clone(),
        spec,
        strategy,
        grouping,
        budget,
        recovery,
        fourier_system,
        dense_workload,
        predicted_entry_variance,
        predicted_total_variance,
    })
}

impl PreparedPipeline {
    pub fn dimension(&self) -> u8 {
        self.d
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn workload(&self) -> &Workload {
        &self.workload
    }

    pub fn spec(&self) -> &PrivacySpec {
        &self.spec
    }

    pub fn strategy(&self) -> &StrategyMatrix {
        &self.strategy
    }

    pub fn grouping(&self) -> &Grouping {
        &self.grouping
    }

    pub fn budget(&self) -> &BudgetSolution {
        &self.budget
    }

    pub fn recovery(&self) -> &RecoveryMatrix {
        &self.recovery
    }

    pub fn predicted_entry_variance(&self) -> &[f64] {
        &self.predicted_entry_variance
    }

    pub fn predicted_total_variance(&self) -> f64 {
        self.predicted_total_variance
    }

    /// Release once under the given seed.
    pub fn run(&self, x: &ContingencyVector, seed: u64) -> Result<ReleaseBundle> {
        let z = mechanism::release(
            &self.strategy,
            x,
            &self.budget.eps,
            &self.spec,
            seed,
            self.config.noiseless,
        )?;
        self.finish(z, seed)
    }

    fn finish(&self, z: NoisyAnswer, seed: u64) -> Result<ReleaseBundle> {
        let y = recovery::answer(&self.recovery, &z)?;
        let consistent = if self.config.consistency {
            Some(match (&self.fourier_system, &self.dense_workload) {
                (Some(sys), _) => consistency::ls_consistent(sys, &y)?.1,
                (None, Some(q)) => consistency::rank_consistent(q, &y)?,
                (None, None) => {
                    return Err(Error::Config(
                        "consistency requested but no consistency path applies".into(),
                    ))
                }
            })
        } else {
            None
        };
        Ok(ReleaseBundle {
            z,
            recovery: self.recovery.clone(),
            y,
            consistent,
            predicted_entry_variance: self.predicted_entry_variance.clone(),
            predicted_total_variance: self.predicted_total_variance,
            metadata: ReleaseMetadata {
                seed,
                spec: self.spec,
                strategy: self.strategy.kind_name().to_string(),
                budget_mode: self.config.budget.name().to_string(),
                recovery_source: self.recovery.source.name().to_string(),
                noiseless: self.config.noiseless,
            },
        })
    }

    /// Exact workload answers Qx.
    pub fn true_answers(&self, x: &ContingencyVector) -> Result<Vec<f64>> {
        true_answers(&self.workload, x)
    }
}

/// Exact workload answers without materializing Q for marginal workloads.
pub fn true_answers(workload: &Workload, x: &ContingencyVector) -> Result<Vec<f64>> {
    match workload.kind() {
        WorkloadKind::MarginalSet(specs) => {
            let mut out = Vec::with_capacity(workload.query_count());
            for s in specs {
                out.extend(crate::transform::compute_marginal(s.alpha, x)?);
            }
            Ok(out)
        }
        WorkloadKind::DenseLinear(m) => m.matvec(x.cells()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{demo_vector, demo_workload};

    fn pure() -> PrivacySpec {
        PrivacySpec::pure(1.0).unwrap()
    }

    fn config(
        strategy: StrategyKind,
        budget: BudgetMode,
        recovery: RecoveryMode,
    ) -> PipelineConfig {
        PipelineConfig {
            strategy,
            budget,
            recovery,
            consistency: false,
            noiseless: false,
        }
    }

    #[test]
    fn demo_predicted_totals() {
        let w = demo_workload();
        let uniform = prepare(
            config(
                StrategyKind::WorkloadMarginals,
                BudgetMode::Uniform,
                RecoveryMode::Natural,
            ),
            &w,
            3,
            pure(),
        )
        .unwrap();
        assert!((uniform.predicted_total_variance() - 48.0).abs() < 1e-9);

        let optimal = prepare(
            config(
                StrategyKind::WorkloadMarginals,
                BudgetMode::Optimal,
                RecoveryMode::Natural,
            ),
            &w,
            3,
            pure(),
        )
        .unwrap();
        let expected = (4.0f64.cbrt() + 8.0f64.cbrt()).powi(3);
        assert!((optimal.predicted_total_variance() - expected).abs() < 1e-9);
        assert!((optimal.budget().objective - expected).abs() < 1e-9);
        // budget objective and recovery-predicted total agree for natural R
        assert!((optimal.budget().objective - optimal.predicted_total_variance()).abs() < 1e-9);
    }

    #[test]
    fn noiseless_run_returns_exact_answers() {
        let w = demo_workload();
        let x = demo_vector();
        for kind in [
            StrategyKind::Identity,
            StrategyKind::WorkloadMarginals,
            StrategyKind::Fourier,
        ] {
            let mut cfg = config(kind, BudgetMode::Optimal, RecoveryMode::Natural);
            cfg.noiseless = true;
            let p = prepare(cfg, &w, 3, pure()).unwrap();
            let bundle = p.run(&x, 0).unwrap();
            let truth = p.true_answers(&x).unwrap();
            for (a, b) in bundle.y.iter().zip(&truth) {
                assert!((a - b).abs() < 1e-9, "strategy {}", p.strategy.kind_name());
            }
        }
    }

    #[test]
    fn fourier_natural_recovery_is_gls_optimal() {
        // for orthonormal strategy rows the natural recovery equals the GLS one
        let w = demo_workload();
        let natural = prepare(
            config(
                StrategyKind::Fourier,
                BudgetMode::Optimal,
                RecoveryMode::Natural,
            ),
            &w,
            3,
            pure(),
        )
        .unwrap();
        let gls = prepare(
            config(
                StrategyKind::Fourier,
                BudgetMode::Optimal,
                RecoveryMode::Gls,
            ),
            &w,
            3,
            pure(),
        )
        .unwrap();
        assert!(
            natural
                .recovery()
                .matrix
                .max_abs_diff(&gls.recovery().matrix)
                < 1e-9
        );
        assert!((natural.predicted_total_variance() - gls.predicted_total_variance()).abs() < 1e-9);
    }

    #[test]
    fn user_marginals_aggregation_recovers_exactly() {
        let w = demo_workload();
        let x = demo_vector();
        let centroid = crate::workload::MarginalSpec::new(
            crate::mask::BitMask::from_binary_str("110").unwrap(),
        );
        let mut cfg = config(
            StrategyKind::UserMarginals(vec![centroid]),
            BudgetMode::Optimal,
            RecoveryMode::Natural,
        );
        cfg.noiseless = true;
        let p = prepare(cfg, &w, 3, pure()).unwrap();
        let bundle = p.run(&x, 0).unwrap();
        let truth = p.true_answers(&x).unwrap();
        for (a, b) in bundle.y.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-9);
        }
        // single strategy marginal: one group, eta = eps
        assert_eq!(p.grouping().group_count(), 1);
        assert!((p.budget().eta[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consistency_step_enforces_sum_rule() {
        let w = demo_workload();
        let x = demo_vector();
        let mut cfg = config(
            StrategyKind::WorkloadMarginals,
            BudgetMode::Optimal,
            RecoveryMode::Natural,
        );
        cfg.consistency = true;
        let p = prepare(cfg, &w, 3, pure()).unwrap();
        let bundle = p.run(&x, 11).unwrap();
        let ybar = bundle.consistent.as_ref().unwrap();
        assert!((ybar[0] - (ybar[2] + ybar[3])).abs() < 1e-9);
        assert!((ybar[1] - (ybar[4] + ybar[5])).abs() < 1e-9);
    }

    #[test]
    fn hierarchical_requires_gls() {
        let w = demo_workload();
        assert!(prepare(
            config(
                StrategyKind::Hierarchical,
                BudgetMode::Optimal,
                RecoveryMode::Natural
            ),
            &w,
            3,
            pure(),
        )
        .is_ok());
        // natural mode falls back to the GLS-initialized recovery, which is fine;
        // run end to end noiselessly
        let mut cfg = config(
            StrategyKind::Hierarchical,
            BudgetMode::Uniform,
            RecoveryMode::Gls,
        );
        cfg.noiseless = true;
        let p = prepare(cfg, &w, 3, pure()).unwrap();
        let x = demo_vector();
        let bundle = p.run(&x, 0).unwrap();
        let truth = p.true_answers(&x).unwrap();
        for (a, b) in bundle.y.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
