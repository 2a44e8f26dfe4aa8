use std::collections::BTreeSet;

use proptest::prelude::*;

use sbtw_core::backdoor::{approx_backdoor, is_strong_backdoor, ApproxConfig, ApproxOutcome, KillerUnionProvider};
use sbtw_core::counting::{count_bruteforce, count_td, count_via_backdoor, solve, SolveConfig, SolveOutcome};
use sbtw_core::formula::{Clause, CnfFormula, Literal, Polarity};
use sbtw_core::generators::{gen_planted, gen_random_cnf, gen_wall_formula};
use sbtw_core::graph::{Graph, WallModel};
use sbtw_core::obstruction::ObstructionProvider;
use sbtw_core::treewidth::upper_bound_heuristic;

/// The 6-wall formula plus x, positive in even and negative in odd clauses.
fn wall_with_x() -> (CnfFormula, WallModel) {
    let (wall, model) = gen_wall_formula(6).unwrap();
    let x = 37;
    let clauses = wall
        .clauses()
        .iter()
        .map(|c| {
            let pol = if c.id() % 2 == 0 { Polarity::Positive } else { Polarity::Negative };
            Clause::new(c.id(), c.literals().iter().copied().chain([Literal::new(x, pol)])).unwrap()
        })
        .collect();
    let f = CnfFormula::new(0, clauses, BTreeSet::new()).unwrap();
    let model = WallModel { host: Graph::incidence(&f), ..model };
    (f, model)
}

#[test]
fn obstruction_provider_drives_the_approximation() {
    let (f, model) = wall_with_x();
    let provider = ObstructionProvider { model };
    let config = ApproxConfig { tw_threshold: 1, ..ApproxConfig::default() };
    let ApproxOutcome::Found(report) = approx_backdoor(&f, 1, 1, config, &provider).unwrap() else {
        panic!("a single variable suffices");
    };
    assert_eq!(report.backdoor, vec![37]);
    let count = count_via_backdoor(&f, &report.set(), 1).unwrap().count;
    let (_, td) = upper_bound_heuristic(&Graph::incidence(&f));
    assert_eq!(count, count_td(&f, &td).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solve_agrees_with_brute_force(n in 3usize..12, m in 1usize..20, width in 2usize..4, k in 0usize..3, seed in any::<u64>()) {
        let f = gen_random_cnf(n, m, width.min(n), seed).unwrap();
        let expected = count_bruteforce(&f).unwrap();
        match solve(&f, SolveConfig::new(1, k)).unwrap() {
            SolveOutcome::Counted { count, .. } => prop_assert_eq!(count, expected),
            SolveOutcome::BackdoorExceeded { .. } => {}
            SolveOutcome::Inconclusive { reason } => prop_assert!(false, "inconclusive: {}", reason),
        }
    }

    #[test]
    fn planted_instances_are_solved(base in 4usize..9, k in 1usize..3, seed in any::<u64>()) {
        let (f, planted) = gen_planted(base, 1, k, seed).unwrap();
        prop_assert!(is_strong_backdoor(&f, &planted, 1).unwrap().is_valid());
        let config = ApproxConfig { tw_threshold: 1, ..ApproxConfig::default() };
        let outcome = approx_backdoor(&f, 1, k, config, &KillerUnionProvider).unwrap();
        let ApproxOutcome::Found(report) = outcome else {
            return Err(TestCaseError::fail("a planted backdoor exists"));
        };
        prop_assert!(report.backdoor.len() < 1 << k);
        let expected = count_bruteforce(&f).unwrap();
        prop_assert_eq!(count_via_backdoor(&f, &report.set(), 1).unwrap().count, expected.clone());
        let solved = solve(&f, SolveConfig::new(1, k)).unwrap();
        prop_assert_eq!(solved.count(), Some(&expected));
    }
}
