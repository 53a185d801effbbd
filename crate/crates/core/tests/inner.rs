use afista::accel::{inner_dual_gap, omega_gap_uncounted, InnerSubproblem};
use afista::inner::{afw_solve, spfw_solve, InnerOptions, LoopKind, StepKind};
use afista::oracles::{CountingOracle, FeasibleSet, SparsityValue};
use afista::reference;
use afista::trace::Branch;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn column(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

fn normalized(w: &[f64]) -> DMatrix<f64> {
    let total: f64 = w.iter().sum();
    column(&w.iter().map(|v| v / total).collect::<Vec<_>>())
}

prop_compose! {
    /// A subproblem on the simplex in dimension 6.
    fn subproblem()(
        g in prop::collection::vec(-2.0f64..2.0, 6),
        y in prop::collection::vec(0.01f64..1.0, 6),
        x in prop::collection::vec(0.01f64..1.0, 6),
        lambda in 1.0f64..20.0,
        beta in 0.1f64..50.0,
    ) -> InnerSubproblem<f64> {
        InnerSubproblem::new(column(&g), normalized(&y), normalized(&x), lambda, beta).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn afw_meets_its_tolerance(sub in subproblem(), log_nu in -9.0f64..-2.0) {
        let set = FeasibleSet::<f64>::simplex(6).unwrap();
        let oracle = CountingOracle::new(&set);
        let nu = 10f64.powf(log_nu);
        let opts = InnerOptions { record_steps: true, ..InnerOptions::default() };
        let res = afw_solve(&sub, &oracle, nu, &opts).unwrap();

        // Stopping rule, recomputed without the solver's bookkeeping.
        prop_assert!(res.certificate <= nu);
        prop_assert!(omega_gap_uncounted(&sub, &res.x, &set).unwrap() <= nu + 1e-12);
        let w = res.w.clone().unwrap();
        prop_assert!((sub.mix(&w) - &res.x).amax() <= 1e-14);

        // Call structure and drop-step bound.
        prop_assert_eq!(res.loo_calls, res.inner_iterations as u64 + 1);
        prop_assert_eq!(oracle.counts().loo, res.loo_calls);
        prop_assert_eq!(res.initial_active, 1);
        prop_assert!(2 * res.drop_steps <= res.inner_iterations + 1);
        let drops = res.steps.iter().filter(|s| s.kind == StepKind::Drop).count();
        prop_assert_eq!(drops, res.drop_steps);

        // Monotone descent of the sliding function, valid active sets.
        for step in &res.steps {
            prop_assert!(step.phi_after <= step.phi_before + 1e-12, "{} -> {}", step.phi_before, step.phi_after);
            prop_assert!(step.active_set_violation.is_none(), "{:?}", step.active_set_violation);
        }
        prop_assert!(set.contains(&res.x, 1e-12));
    }

    #[test]
    fn omega_at_a_mix_is_the_sliding_gap(sub in subproblem(), w in prop::collection::vec(0.0f64..1.0, 6)) {
        prop_assume!(w.iter().sum::<f64>() > 1e-3);
        let set = FeasibleSet::<f64>::simplex(6).unwrap();
        let oracle = CountingOracle::new(&set);
        let w = normalized(&w);
        let omega = omega_gap_uncounted(&sub, &sub.mix(&w), &set).unwrap();
        let gap = inner_dual_gap(&sub, &w, &oracle).unwrap();
        prop_assert!((omega - gap).abs() <= 1e-9 * (1.0 + gap.abs()), "{omega} vs {gap}");
    }

    #[test]
    fn sparse_projection_branches_account_for_calls(sub in subproblem(), r in 0usize..6, fw in any::<bool>()) {
        let set = FeasibleSet::<f64>::simplex(6).unwrap();
        let oracle = CountingOracle::new(&set);
        // The plain FW loop converges sublinearly: a looser target and a
        // generous iteration cap keep it reachable on every subproblem.
        let (kind, nu) = if fw { (LoopKind::Fw, 1e-4) } else { (LoopKind::Afw, 1e-7) };
        let opts = InnerOptions { cap: Some(1_000_000), ..InnerOptions::default() };
        let res = spfw_solve(&sub, &oracle, nu, SparsityValue(r), kind, &opts).unwrap();
        prop_assert_eq!(res.sparse_proj_calls, 1);
        match res.branch {
            Branch::SparseProjectionHit => {
                prop_assert_eq!(res.loo_calls, 1);
                prop_assert_eq!(res.inner_iterations, 0);
                prop_assert!(set.sp_measure(&res.x).unwrap().0 <= r);
            }
            Branch::FwLoop | Branch::AfwLoop => {
                prop_assert_eq!(res.branch == Branch::FwLoop, fw);
                prop_assert_eq!(res.loo_calls, res.inner_iterations as u64 + 1);
                prop_assert!(2 * res.drop_steps <= res.inner_iterations + res.initial_active);
            }
            other => prop_assert!(false, "unexpected branch {other:?}"),
        }
        prop_assert!(res.certificate <= nu);
        let audit = afista::accel::audit_stop(&sub, &res, &set).unwrap();
        prop_assert!(audit <= nu + 1e-12);
        prop_assert_eq!(oracle.counts().loo, res.loo_calls);
    }
}

#[test]
fn omega_matches_grid_enumeration_on_the_two_simplex() {
    let set = FeasibleSet::<f64>::simplex(2).unwrap();
    for (i, lambda) in [1.0, 1.7, 4.0, 12.0].into_iter().enumerate() {
        let sub = InnerSubproblem::new(
            column(&[0.3 - 0.2 * i as f64, 0.1]),
            column(&[0.25, 0.75]),
            column(&[0.6, 0.4]),
            lambda,
            3.0,
        )
        .unwrap();
        for a in [0.0, 0.2, 0.5, 0.9] {
            let x = column(&[a, 1.0 - a]);
            let exact = omega_gap_uncounted(&sub, &x, &set).unwrap();
            let grid = reference::omega_on_grid(&sub, &x, 2000);
            assert!((exact - grid).abs() <= 1e-12, "lambda {lambda}, a {a}: {exact} vs {grid}");
        }
    }
}

#[test]
fn full_sparsity_sparse_projection_always_hits() {
    let set = FeasibleSet::<f64>::simplex(5).unwrap();
    let oracle = CountingOracle::new(&set);
    let sub = InnerSubproblem::new(
        column(&[0.4, -0.3, 0.2, 0.0, 0.1]),
        normalized(&[1.0, 2.0, 3.0, 4.0, 5.0]),
        normalized(&[5.0, 1.0, 1.0, 1.0, 1.0]),
        3.0,
        2.0,
    )
    .unwrap();
    let res = spfw_solve(&sub, &oracle, 1e-10, SparsityValue(4), LoopKind::Afw, &InnerOptions::default()).unwrap();
    assert_eq!(res.branch, Branch::SparseProjectionHit);
    let exact = set.exact_project(&sub.prox_center()).unwrap();
    assert!((res.x - exact).amax() <= 1e-14);
}

#[test]
fn iteration_cap_is_reported() {
    let set = FeasibleSet::<f64>::simplex(50).unwrap();
    let oracle = CountingOracle::new(&set);
    let g = DMatrix::from_fn(50, 1, |i, _| ((i * 37) % 11) as f64 / 11.0 - 0.5);
    let sub = InnerSubproblem::new(g, set.barycenter(), set.barycenter(), 1.0, 1.0).unwrap();
    let opts = InnerOptions {
        cap: Some(3),
        ..InnerOptions::default()
    };
    let err = afw_solve(&sub, &oracle, 1e-14, &opts).unwrap_err();
    assert!(matches!(err, afista::Error::IterationCap { cap: 3, .. }), "{err}");
}
