//! Differentially private release of datacubes, contingency tables and
//! marginal query workloads.
//!
//! The release framework factors a query workload Q into a strategy S that
//! is answered with calibrated noise and a recovery map R with Q = RS.
//! Budgets are allocated per group of strategy rows by a closed form, the
//! recovery is recomputed by generalized least squares under the resulting
//! heteroscedastic noise, and marginal answers can be projected onto a
//! consistent set via their shared Fourier coefficients.

// index-based loops are the clearer idiom in the dense-matrix kernels
#![allow(clippy::needless_range_loop)]

pub mod budget;
pub mod consistency;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod ingest;
mod linalg;
pub mod mask;
pub mod matrix;
pub mod mechanism;
pub mod pipeline;
pub mod recovery;
pub mod schema;
pub mod strategy;
pub mod transform;
pub mod vector;
pub mod workload;

pub use budget::{
    compute_b, kway_b_closed_form, solve_approx, solve_pure, uniform_budget, BudgetProblem,
    BudgetSolution, OptimalityStatus,
};
pub use consistency::{
    build_fourier_system, ls_consistent, rank_consistent, FourierRecoverySystem,
};
pub use error::{Error, Result};
pub use mask::{dominates, BitMask};
pub use matrix::DenseMatrix;
pub use mechanism::{l1_sensitivity, l2_sensitivity, release, NoisyAnswer, PrivacySpec};
pub use pipeline::{
    prepare, true_answers, BudgetMode, PipelineConfig, PreparedPipeline, RecoveryMode,
};
pub use recovery::{
    answer, gls_recovery, predicted_variance, RecoveryMatrix, RecoverySource, ReleaseBundle,
};
pub use schema::{Attribute, AttributeSchema};
pub use strategy::{
    build_strategy, greedy_grouping, recovery_consistent_with_grouping, verify_grouping, Grouping,
    StrategyKind, StrategyMatrix,
};
pub use transform::{
    basis_marginal_entry, compute_marginal, fwht, fwht_in_place, marginal_from_coeffs,
    FourierCoefficients,
};
pub use vector::ContingencyVector;
pub use workload::{MarginalSpec, Workload, WorkloadKind};
