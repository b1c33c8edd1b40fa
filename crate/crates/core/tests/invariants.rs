//! Property-based invariants across modules.

use proptest::prelude::*;

use privcube_core::{
    build_strategy, compute_marginal, dominates, fwht, fwht_in_place, marginal_from_coeffs,
    prepare, rank_consistent, uniform_budget, verify_grouping, BitMask, BudgetMode, BudgetProblem,
    ContingencyVector, MarginalSpec, PipelineConfig, PrivacySpec, RecoveryMode, StrategyKind,
    Workload,
};

fn mask_pair(d: u8) -> impl Strategy<Value = (BitMask, BitMask)> {
    let top = (1u32 << d) - 1;
    (0..=top, 0..=top)
        .prop_map(move |(a, b)| (BitMask::new(a, d).unwrap(), BitMask::new(b, d).unwrap()))
}

proptest! {
    #[test]
    fn meet_dominates_both((a, b) in mask_pair(8)) {
        let g = a.meet(&b).unwrap();
        prop_assert!(dominates(&g, &a).unwrap());
        prop_assert!(dominates(&g, &b).unwrap());
        prop_assert_eq!(a.inner(&b).unwrap(), g.weight());
    }

    #[test]
    fn dominated_enumeration_is_complete(bits in 0u32..256) {
        let alpha = BitMask::new(bits, 8).unwrap();
        let all: Vec<BitMask> = alpha.dominated().collect();
        prop_assert_eq!(all.len(), 1usize << alpha.weight());
        for w in all.windows(2) {
            prop_assert!(w[0].bits() < w[1].bits());
        }
        for b in &all {
            prop_assert!(dominates(b, &alpha).unwrap());
        }
    }

    #[test]
    fn fwht_is_an_isometric_involution(cells in prop::collection::vec(-100.0f64..100.0, 64)) {
        let mut once = cells.clone();
        fwht_in_place(&mut once).unwrap();
        let norm_in: f64 = cells.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_out: f64 = once.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm_in - norm_out).abs() <= 1e-9 * norm_in.max(1.0));
        fwht_in_place(&mut once).unwrap();
        for (a, b) in once.iter().zip(&cells) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn marginal_reconstruction_matches_direct(
        cells in prop::collection::vec(0.0f64..50.0, 128),
        alpha_bits in 0u32..128,
    ) {
        prop_assume!(alpha_bits.count_ones() <= 3);
        let d = 7u8;
        let x = ContingencyVector::from_cells(d, cells).unwrap();
        let alpha = BitMask::new(alpha_bits, d).unwrap();
        let direct = compute_marginal(alpha, &x).unwrap();
        let via_coeffs = marginal_from_coeffs(alpha, &fwht(&x)).unwrap();
        for (a, b) in direct.iter().zip(&via_coeffs) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

fn arbitrary_marginal_workload(d: u8) -> impl Strategy<Value = Workload> {
    let top = (1u32 << d) - 1;
    prop::collection::btree_set(0..=top, 1..5).prop_map(move |masks| {
        Workload::marginals(
            masks
                .into_iter()
                .map(|m| MarginalSpec::new(BitMask::new(m, d).unwrap()))
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_groupings_verify_and_greedy_is_no_coarser(w in arbitrary_marginal_workload(5)) {
        let d = 5u8;
        for kind in [
            StrategyKind::Identity,
            StrategyKind::WorkloadMarginals,
            StrategyKind::Fourier,
            StrategyKind::Hierarchical,
        ] {
            let (s, g) = build_strategy(&kind, &w, d).unwrap();
            let dense = s.to_dense().unwrap();
            prop_assert!(verify_grouping(&dense, &g, 1e-12), "kind {}", s.kind_name());
            let greedy = privcube_core::greedy_grouping(&dense, 1e-12).unwrap();
            prop_assert!(verify_grouping(&dense, &greedy, 1e-12));
            prop_assert!(greedy.group_count() <= g.group_count());
        }
    }

    #[test]
    fn optimal_budget_never_worse_than_uniform(
        w in arbitrary_marginal_workload(5),
        pure in any::<bool>(),
    ) {
        let d = 5u8;
        let spec = if pure {
            PrivacySpec::pure(1.0).unwrap()
        } else {
            PrivacySpec::approx(1.0, 1e-5).unwrap()
        };
        for kind in [StrategyKind::WorkloadMarginals, StrategyKind::Fourier] {
            let config = |budget| PipelineConfig {
                strategy: kind.clone(),
                budget,
                recovery: RecoveryMode::Natural,
                consistency: false,
                noiseless: false,
            };
            let opt = prepare(config(BudgetMode::Optimal), &w, d, spec).unwrap();
            let uni = prepare(config(BudgetMode::Uniform), &w, d, spec).unwrap();
            prop_assert!(
                opt.budget().objective <= uni.budget().objective * (1.0 + 1e-12),
                "kind {} opt {} uni {}",
                opt.strategy().kind_name(),
                opt.budget().objective,
                uni.budget().objective
            );
        }
    }

    #[test]
    fn budget_normalization_is_exact(w in arbitrary_marginal_workload(5), pure in any::<bool>()) {
        let d = 5u8;
        let spec = if pure {
            PrivacySpec::pure(1.25).unwrap()
        } else {
            PrivacySpec::approx(1.25, 1e-6).unwrap()
        };
        let (_, grouping) = build_strategy(&StrategyKind::Fourier, &w, d).unwrap();
        let b: Vec<f64> = (0..grouping.row_count()).map(|i| 1.0 + (i % 7) as f64).collect();
        let p = BudgetProblem::new(b, grouping.clone(), spec).unwrap();
        let sol = match spec {
            PrivacySpec::Pure { .. } => privcube_core::solve_pure(&p).unwrap(),
            PrivacySpec::Approx { .. } => privcube_core::solve_approx(&p).unwrap(),
        };
        match spec {
            PrivacySpec::Pure { epsilon } => {
                let lhs: f64 = sol.eta.iter().zip(grouping.constants()).map(|(e, c)| e * c).sum();
                prop_assert!((lhs - epsilon).abs() <= 1e-12 * epsilon);
            }
            PrivacySpec::Approx { epsilon, .. } => {
                let lhs: f64 = sol
                    .eta
                    .iter()
                    .zip(grouping.constants())
                    .map(|(e, c)| e * e * c * c)
                    .sum();
                prop_assert!((lhs - epsilon * epsilon).abs() <= 1e-12 * epsilon * epsilon);
            }
        }
        // uniform also satisfies its normalization
        let uni = uniform_budget(&p).unwrap();
        match spec {
            PrivacySpec::Pure { epsilon } => {
                let lhs: f64 = uni.eta.iter().zip(grouping.constants()).map(|(e, c)| e * c).sum();
                prop_assert!((lhs - epsilon).abs() <= 1e-12 * epsilon);
            }
            PrivacySpec::Approx { epsilon, .. } => {
                let lhs: f64 = uni
                    .eta
                    .iter()
                    .zip(grouping.constants())
                    .map(|(e, c)| e * e * c * c)
                    .sum();
                prop_assert!((lhs - epsilon * epsilon).abs() <= 1e-12 * epsilon * epsilon);
            }
        }
    }
}

#[test]
fn gaussian_mode_empirical_variance_matches_prediction() {
    // the Approx-mode budget objective follows the closed-form convention,
    // which counts the Laplace factor twice; the bundle's predicted variance
    // is the true one, and Monte Carlo must agree with it (not the objective)
    let d = 6u8;
    let w = Workload::marginals(
        (0..d)
            .map(|i| MarginalSpec::new(BitMask::new(1 << i, d).unwrap()))
            .collect(),
    )
    .unwrap();
    let spec = PrivacySpec::approx(1.0, 1e-6).unwrap();
    let p = prepare(
        PipelineConfig {
            strategy: StrategyKind::Fourier,
            budget: BudgetMode::Optimal,
            recovery: RecoveryMode::Natural,
            consistency: false,
            noiseless: false,
        },
        &w,
        d,
        spec,
    )
    .unwrap();
    assert!(
        (p.budget().objective - 2.0 * p.predicted_total_variance()).abs()
            < 1e-9 * p.budget().objective
    );
    let x = privcube_core::evaluate::synth::dirichlet_multinomial(d, 2000, 1.0, 3).unwrap();
    let report = privcube_core::evaluate::measure(&p, &x, 100_000, 17).unwrap();
    let rel = (report.total_variance_empirical - report.total_variance_predicted).abs()
        / report.total_variance_predicted;
    assert!(
        rel < 0.05,
        "empirical {} vs predicted {}",
        report.total_variance_empirical,
        report.total_variance_predicted
    );
}

#[test]
fn fourier_jensen_error_chain_holds_without_sampling() {
    // optimal-budget expected error <= uniform-budget expected error <= the
    // uniform-release bound, per marginal, purely from predicted variances
    let eps = 1.0;
    for d in [4u8, 6, 8, 10, 12] {
        for k in 1..=3u8.min(d) {
            let specs: Vec<MarginalSpec> = (0..(1u32 << d))
                .filter(|m| m.count_ones() == k as u32)
                .map(|m| MarginalSpec::new(BitMask::new(m, d).unwrap()))
                .collect();
            let w = Workload::marginals(specs).unwrap();
            let prep = |budget| {
                prepare(
                    PipelineConfig {
                        strategy: StrategyKind::Fourier,
                        budget,
                        recovery: RecoveryMode::Natural,
                        consistency: false,
                        noiseless: false,
                    },
                    &w,
                    d,
                    PrivacySpec::pure(eps).unwrap(),
                )
                .unwrap()
            };
            let opt = prep(BudgetMode::Optimal);
            let uni = prep(BudgetMode::Uniform);
            let l1_opt = privcube_core::evaluate::analytic_expected_marginal_l1(&opt);
            let l1_uni = privcube_core::evaluate::analytic_expected_marginal_l1(&uni);
            let bound = privcube_core::evaluate::bound_fourier_uniform(
                k as u32,
                opt.strategy().row_count(),
                eps,
            );
            for (o, u) in l1_opt.iter().zip(&l1_uni) {
                assert!(o <= &(u * (1.0 + 1e-12)), "d {d} k {k}: opt {o} > unif {u}");
                assert!(*u <= bound, "d {d} k {k}: unif {u} > bound {bound}");
            }
        }
    }
}

#[test]
fn consistent_outputs_admit_a_witness_dataset() {
    // Definition of consistency: some x^c with Q x^c = y-bar. Rebuild x^c
    // from the fitted coefficients and check, across strategies and seeds.
    let d = 5u8;
    let masks = ["10000", "11000", "00110"];
    let w = Workload::marginals(
        masks
            .iter()
            .map(|m| MarginalSpec::new(BitMask::from_binary_str(m).unwrap()))
            .collect(),
    )
    .unwrap();
    let x = privcube_core::evaluate::synth::dirichlet_multinomial(d, 400, 1.0, 5).unwrap();
    let q = w.matrix(d).unwrap();
    for kind in [StrategyKind::WorkloadMarginals, StrategyKind::Fourier] {
        let config = PipelineConfig {
            strategy: kind,
            budget: BudgetMode::Optimal,
            recovery: RecoveryMode::Natural,
            consistency: true,
            noiseless: false,
        };
        let p = prepare(config, &w, d, PrivacySpec::pure(0.5).unwrap()).unwrap();
        for seed in [1u64, 2, 3] {
            let bundle = p.run(&x, seed).unwrap();
            let ybar = bundle.consistent.clone().unwrap();
            // range membership via the projection fixed point
            let again = rank_consistent(&q, &ybar).unwrap();
            for (a, b) in again.iter().zip(&ybar) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn consistency_error_at_most_doubles() {
    let w = privcube_core::fixtures::demo_workload();
    let x = privcube_core::fixtures::demo_vector();
    let config = PipelineConfig {
        strategy: StrategyKind::WorkloadMarginals,
        budget: BudgetMode::Optimal,
        recovery: RecoveryMode::Natural,
        consistency: true,
        noiseless: false,
    };
    let p = prepare(config, &w, 3, PrivacySpec::pure(1.0).unwrap()).unwrap();
    let truth = p.true_answers(&x).unwrap();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    for seed in 0..1000u64 {
        let bundle = p.run(&x, seed).unwrap();
        let ybar = bundle.consistent.as_ref().unwrap();
        assert!(dist(ybar, &bundle.y) <= dist(&truth, &bundle.y) + 1e-9);
    }
}

#[test]
fn cross_marginal_agreement_on_overlapping_workload() {
    // marginals over {a,b} and {b,c}: both aggregate to the marginal over b
    let d = 3u8;
    let ab = BitMask::from_binary_str("110").unwrap();
    let bc = BitMask::from_binary_str("011").unwrap();
    let w = Workload::marginals(vec![MarginalSpec::new(ab), MarginalSpec::new(bc)]).unwrap();
    let x = privcube_core::fixtures::demo_vector();
    let config = PipelineConfig {
        strategy: StrategyKind::Fourier,
        budget: BudgetMode::Optimal,
        recovery: RecoveryMode::Natural,
        consistency: true,
        noiseless: false,
    };
    let p = prepare(config, &w, d, PrivacySpec::pure(1.0).unwrap()).unwrap();
    let b_mask = ab.meet(&bc).unwrap();
    for seed in 0..50u64 {
        let bundle = p.run(&x, seed).unwrap();
        let ybar = bundle.consistent.as_ref().unwrap();
        let from_ab =
            privcube_core::consistency::aggregate_marginal(ab, &ybar[0..4], b_mask).unwrap();
        let from_bc =
            privcube_core::consistency::aggregate_marginal(bc, &ybar[4..8], b_mask).unwrap();
        for (a, b) in from_ab.iter().zip(&from_bc) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn epsilon_scaling_and_column_constraint() {
    // scaling epsilon by c scales the pure objective by 1/c^2; the released
    // budgets always satisfy the per-column constraint
    let w = privcube_core::fixtures::demo_workload();
    for kind in [StrategyKind::WorkloadMarginals, StrategyKind::Fourier] {
        let (s, grouping) = build_strategy(&kind, &w, 3).unwrap();
        let b: Vec<f64> = vec![2.0; grouping.row_count()];
        let base = BudgetProblem::new(b.clone(), grouping.clone(), PrivacySpec::pure(1.0).unwrap())
            .unwrap();
        let scaled =
            BudgetProblem::new(b, grouping.clone(), PrivacySpec::pure(2.0).unwrap()).unwrap();
        let o1 = privcube_core::solve_pure(&base).unwrap();
        let o2 = privcube_core::solve_pure(&scaled).unwrap();
        assert!((o2.objective - o1.objective / 4.0).abs() < 1e-12 * o1.objective);
        // per-column check straight from the dense matrix, independently of
        // the collapsed formula used inside release
        let dense = s.to_dense().unwrap();
        for (sol, eps) in [(&o1, 1.0), (&o2, 2.0)] {
            for j in 0..dense.cols() {
                let used: f64 = (0..dense.rows())
                    .map(|i| dense.get(i, j).abs() * sol.eps[i])
                    .sum();
                assert!(used <= eps + 1e-12, "column {j}: {used} > {eps}");
            }
            let collapsed = s.max_column_l1_weighted(&sol.eps).unwrap();
            assert!(collapsed <= eps + 1e-12);
        }
    }
}
