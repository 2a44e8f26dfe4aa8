//! Strong backdoors into bounded incidence treewidth: CNF formulas,
//! incidence graphs, exact and heuristic treewidth, model counting over
//! tree decompositions and backdoors, backdoor search, wall-obstruction
//! templates and instance generators.

pub mod backdoor;
pub mod counting;
pub mod formula;
pub mod generators;
pub mod graph;
pub mod obstruction;
pub mod pace;
pub mod treewidth;

pub use backdoor::{
    approx_backdoor, find_smallest_strong_backdoor, is_deletion_backdoor, is_strong_backdoor, killer_set, ApproxConfig,
    ApproxOutcome, BackdoorError, BackdoorKind, BackdoorReport, CandidateProvider, KillerSet, KillerUnionProvider,
    SearchOutcome, SearchStats, Verdict,
};
pub use counting::{
    count_bruteforce, count_td, count_via_backdoor, solve, BackdoorCount, CountError, CountPath, ModelCount, SolveConfig,
    SolveOutcome,
};
pub use formula::{parse_dimacs, to_dimacs, ParseError, Assignment, Clause, ClauseId, CnfFormula, FormulaError, Literal, Polarity, Var};
pub use graph::{Graph, GraphError, Vertex, WallModel};
pub use obstruction::{fpt_constants, FptConstants, ObstructionTemplate, RuleOutcome, WallObstruction};
pub use pace::{IdMap, PaceError};
pub use treewidth::{
    exact_treewidth, treewidth_at_most, upper_bound_heuristic, validate_decomposition, TreeDecomposition, TwVerdict,
    Width,
};

/// Serializes big integers as decimal strings.
pub(crate) fn serialize_decimal<S: serde::Serializer>(n: &num_bigint::BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(n)
}
