use myopic_core::formulas::COUNTEREXAMPLE_1;
use myopic_core::search::{
    random_search, sample_instance, sweep_verify, verify_identity_region, Grid, IntRange,
    PConstraint, SweepSpec,
};
use myopic_core::{evaluate_policy, myopic_gap, PolicySpec, DEFAULT_NODE_BUDGET};

fn random_spec(n: IntRange, k: IntRange, t: IntRange, c: PConstraint) -> SweepSpec {
    let mut s = SweepSpec::grid(n, k, t, 0.1, c);
    s.budget = DEFAULT_NODE_BUDGET;
    s
}

#[test]
fn random_search_finds_nothing_in_positive_two_slot_regime() {
    let spec = random_spec(
        IntRange::new(3, 6),
        IntRange::single(2),
        IntRange::single(2),
        PConstraint::P11GeP01,
    );
    assert_eq!(random_search(&spec, 2024, 10_000).unwrap(), None);
}

#[test]
fn random_search_finds_gap_with_three_sensed_channels() {
    let spec = random_spec(
        IntRange::single(6),
        IntRange::single(3),
        IntRange::single(2),
        PConstraint::P11GeP01,
    );
    let best = random_search(&spec, 1, 2_000)
        .unwrap()
        .expect("a positive gap exists for N = 6, k = 3");
    assert!(best.gap > spec.gap_threshold);
    // Independently re-checkable.
    assert!((myopic_gap(&best.cfg).unwrap() - best.gap).abs() <= 1e-12);
    let w = evaluate_policy(&best.cfg, &best.witness_policy).unwrap();
    let m = evaluate_policy(&best.cfg, &PolicySpec::Myopic).unwrap();
    assert!((w.total_expected_reward - m.total_expected_reward - best.gap).abs() <= 1e-12);
    // Bitwise reproducible.
    let again = random_search(&spec, 1, 2_000).unwrap().unwrap();
    assert_eq!(again.gap.to_bits(), best.gap.to_bits());
    assert_eq!(again, best);
}

#[test]
fn memoryless_channels_never_show_a_gap() {
    let spec = random_spec(
        IntRange::new(3, 5),
        IntRange::new(1, 3),
        IntRange::new(1, 3),
        PConstraint::Equal,
    );
    for trial in 0..300 {
        let cfg = sample_instance(&spec, 5, trial).unwrap();
        assert_eq!(myopic_gap(&cfg).unwrap(), 0.0, "{cfg:?}");
    }
}

#[test]
fn identity_region_bounds_hold() {
    let s = verify_identity_region(10_000, 17).unwrap();
    assert!(s.myopic_minus_top_third.min >= -1e-12);
    assert!(s.myopic_minus_top_far.min >= -1e-12);
    assert!(s.myopic_minus_outer_pair.min >= -1e-12);
    assert_eq!(s.instances, 10_000);
}

#[test]
fn grid_enumeration_counts_sorted_tuples_once() {
    // 3 grid values, N = 4: C(6, 4) = 15 tuples; 6 admissible pairs.
    let mut spec = SweepSpec::grid(
        IntRange::single(4),
        IntRange::single(2),
        IntRange::single(1),
        0.5,
        PConstraint::P11GeP01,
    );
    spec.gap_threshold = 0.0;
    let out = sweep_verify(&spec).unwrap();
    assert_eq!(out.instances_total, 15 * 6);
    assert_eq!(out.instances_checked, 15 * 6);
}

#[test]
fn counterexample_points_are_excluded_only_by_constraint() {
    let mut spec = SweepSpec::grid(
        IntRange::single(6),
        IntRange::single(3),
        IntRange::single(2),
        0.1,
        PConstraint::P11GeP01,
    );
    spec.belief_grid = Grid::Values(myopic_core::formulas::COUNTEREXAMPLE_BELIEFS.to_vec());
    spec.p_grid = Grid::Values(vec![COUNTEREXAMPLE_1.p01, COUNTEREXAMPLE_1.p11]);
    let out = sweep_verify(&spec).unwrap();
    assert!(out.findings.iter().any(|f| {
        f.cfg.initial_belief().as_slice() == myopic_core::formulas::COUNTEREXAMPLE_BELIEFS
            && f.cfg.model().p01() == COUNTEREXAMPLE_1.p01
            && f.cfg.model().p11() == COUNTEREXAMPLE_1.p11
    }));
}
