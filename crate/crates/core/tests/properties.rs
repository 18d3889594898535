//! Randomized invariants over the builtin systems.

mod common;

use common::*;
use proptest::prelude::*;
use realmono::cmono::{monodromy_group, GroupOptions};
use realmono::polysys::{parse_system, print_system, BuiltinName};
use realmono::regionmap::MapOptions;
use realmono::tracker::TrackOptions;

fn builtin_name() -> impl Strategy<Value = BuiltinName> {
    prop::sample::select(BuiltinName::ALL.to_vec())
}

fn ok(r: Result<(), String>) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn evaluation_commutes_with_conjugation(name in builtin_name(), seed in any::<u64>()) {
        ok(check_conjugate_eval(name, &mut rng(seed)))?;
    }

    #[test]
    fn jacobian_matches_finite_differences(name in builtin_name(), seed in any::<u64>()) {
        ok(check_jacobian(name, &mut rng(seed)).map(|_| ()))?;
    }

    #[test]
    fn partial_permutation_laws(n in 1usize..7, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_partial(n, &mut r), random_partial(n, &mut r), random_partial(n, &mut r));
        ok(check_partial_laws(&a, &b, &c))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn real_solution_parity(name in builtin_name(), seed in any::<u64>()) {
        ok(usable(&mut rng(seed), |r| check_parity(name, r)))?;
    }

    #[test]
    fn track_round_trip(name in builtin_name(), seed in any::<u64>()) {
        ok(usable(&mut rng(seed), |r| check_round_trip(name, r)))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10, ..ProptestConfig::default() })]

    #[test]
    fn conjugate_starts_stay_conjugate(
        name in prop::sample::select(vec![BuiltinName::Ex21, BuiltinName::Modified34, BuiltinName::Kuramoto3]),
        seed in any::<u64>(),
    ) {
        ok(usable(&mut rng(seed), |r| check_conjugate_tracking(name, r)))?;
    }

    #[test]
    fn transport_agrees_with_fresh_solve(name in builtin_name(), seed in any::<u64>()) {
        ok(usable(&mut rng(seed), |r| check_resolve(name, r)))?;
    }

    #[test]
    fn degree_is_constant(name in builtin_name(), seed in any::<u64>()) {
        let d = match name {
            BuiltinName::Ex21 => 4,
            BuiltinName::Univariate => 2,
            BuiltinName::Modified34 | BuiltinName::Kuramoto3 | BuiltinName::Rpr3 => 6,
        };
        ok(check_degree(name, d, &mut rng(seed)))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn loops_permute_the_base_solutions(
        name in prop::sample::select(vec![BuiltinName::Ex21, BuiltinName::Kuramoto3]),
        seed in any::<u64>(),
    ) {
        let base = base_solutions(name);
        ok(usable(&mut rng(seed), |r| check_loop_bijection(name, &base, r)))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 5, ..ProptestConfig::default() })]

    #[test]
    fn ex21_group_order_is_base_independent(seed in any::<u64>()) {
        prop_assert_eq!(group_order_at_random_base(BuiltinName::Ex21, &mut rng(seed)), Ok(4));
    }
}

#[test]
fn monodromy_groups_are_closed_and_generators_retrack() {
    for name in BuiltinName::ALL {
        let base = base_solutions(name);
        let g = monodromy_group(&sys(name), &base, &GroupOptions::default(), &TrackOptions::complex());
        check_group_closure(&g).unwrap_or_else(|e| panic!("{name}: {e}"));
        check_generators_retrack(name, &base, &g).unwrap();
    }
}

#[test]
fn printed_systems_parse_back() {
    for name in BuiltinName::ALL {
        let s = sys(name);
        assert_eq!(parse_system(&print_system(&s)).unwrap().equations(), s.equations(), "{name}");
    }
}

/// Region-map and structure invariants on the systems that scan quickly.
#[test]
fn region_and_structure_invariants() {
    let cases = [
        (BuiltinName::Ex21, vec![61, 61], MapOptions { declared_punctures: vec![vec![0.0, 0.0]], ..MapOptions::default() }),
        (BuiltinName::Univariate, vec![101], MapOptions::default()),
        (BuiltinName::Modified34, vec![81, 81], MapOptions::default()),
    ];
    let mut r = rng(11);
    for (name, res, opts) in cases {
        let base = base_solutions(name);
        let map = region_map(name, &base, &realmono::cli::default_window(name), &res, &opts);
        check_region_parity(&map, base.d()).unwrap_or_else(|e| panic!("{name}: {e}"));
        check_routes(&map).unwrap_or_else(|e| panic!("{name}: {e}"));
        check_marked_counts(name, &map).unwrap_or_else(|e| panic!("{name}: {e}"));
        let res = rms(name, &map, &base).unwrap();
        check_structure(&res.structure).unwrap_or_else(|e| panic!("{name}: {e}"));
        check_element_closure(&res).unwrap_or_else(|e| panic!("{name}: {e}"));
        check_witness_replay(name, &base, &res, 10, &mut r).unwrap();
    }
}

#[test]
fn univariate_census_is_stable_under_refinement() {
    let name = BuiltinName::Univariate;
    let base = base_solutions(name);
    let w = realmono::cli::default_window(name);
    let a = region_map(name, &base, &w, &[101], &MapOptions::default());
    let b = region_map(name, &base, &w, &[201], &MapOptions::default());
    assert_eq!(census(&a), census(&b));
}
