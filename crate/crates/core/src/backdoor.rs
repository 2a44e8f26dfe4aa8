//! Strong and deletion backdoor sets into bounded incidence treewidth:
//! verification, killers, witnesses, exact search and the approximation
//! recursion with s(k) = 2^k − 1.

use std::collections::{BTreeSet, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{assignments_capped, Assignment, Assignments, CnfFormula, FormulaError, Polarity, Var};
use crate::graph::{Graph, Vertex};
use crate::treewidth::{treewidth_at_most_with_cap, ExceedsCertificate, TwVerdict, DEFAULT_VERTEX_CAP};

/// Largest backdoor whose 2^|B| reductions are enumerated.
pub const VERIFY_CAP: usize = 20;
/// Largest k_max accepted by the exact search.
pub const MAX_EXACT_K: usize = 6;
pub const DEFAULT_TW_THRESHOLD: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackdoorError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("variable {0} does not occur in the formula")]
    NotInFormula(Var),
    #[error("backdoor of {size} variables exceeds the verification cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("k_max = {0} is above the exact-search limit of {MAX_EXACT_K}")]
    KMaxTooLarge(usize),
    #[error("witness extraction needs tw(inc(F[{0}])) above t, which does not hold")]
    NotAnObstruction(Assignment),
    #[error("treewidth of inc(F[{0}]) could not be decided within the vertex cap")]
    Inconclusive(Assignment),
    #[error("candidate provider failed: {0}")]
    Provider(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackdoorKind {
    Strong,
    Deletion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    /// The first failing reduction (none for deletion backdoors) and why it fails.
    Invalid { assignment: Option<Assignment>, certificate: ExceedsCertificate },
    /// Some reduction could not be decided and none failed.
    Inconclusive { assignment: Option<Assignment> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes: usize,
    pub checks: usize,
}

#[derive(Debug, Default)]
struct Counters {
    nodes: AtomicUsize,
    checks: AtomicUsize,
}

impl Counters {
    fn node(&self) {
        self.nodes.fetch_add(1, Ordering::Relaxed);
    }

    fn checks(&self, n: usize) {
        self.checks.fetch_add(n, Ordering::Relaxed);
    }

    fn snapshot(&self) -> SearchStats {
        SearchStats { nodes: self.nodes.load(Ordering::Relaxed), checks: self.checks.load(Ordering::Relaxed) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BackdoorReport {
    pub backdoor: Vec<Var>,
    pub kind: BackdoorKind,
    pub t: usize,
    pub verdict: Verdict,
    pub stats: SearchStats,
}

impl BackdoorReport {
    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::Valid
    }

    pub fn set(&self) -> BTreeSet<Var> {
        self.backdoor.iter().copied().collect()
    }
}

fn check_subset(f: &CnfFormula, b: &BTreeSet<Var>) -> Result<(), BackdoorError> {
    let vars = f.vars();
    match b.iter().find(|v| !vars.contains(v)) {
        Some(&v) => Err(BackdoorError::NotInFormula(v)),
        None => Ok(()),
    }
}

fn strong_verdict(f: &CnfFormula, b: &BTreeSet<Var>, t: usize, cap: usize) -> Result<Verdict, BackdoorError> {
    if b.len() > VERIFY_CAP {
        return Err(BackdoorError::TooLarge { size: b.len(), cap: VERIFY_CAP });
    }
    let order: Vec<Var> = b.iter().copied().collect();
    let total = assignments_capped(b, VERIFY_CAP)?.total();
    let verdicts: Vec<(Assignment, TwVerdict)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let tau = Assignments::nth_assignment(&order, i);
            let reduced = f.reduce(&tau)?;
            let verdict = treewidth_at_most_with_cap(&Graph::incidence(&reduced), t, cap);
            Ok((tau, verdict))
        })
        .collect::<Result<_, FormulaError>>()?;
    let mut unknown = None;
    for (tau, verdict) in verdicts {
        match verdict {
            TwVerdict::Exceeds { certificate } => {
                return Ok(Verdict::Invalid { assignment: Some(tau), certificate });
            }
            TwVerdict::Unknown { .. } if unknown.is_none() => unknown = Some(tau),
            _ => {}
        }
    }
    Ok(match unknown {
        Some(tau) => Verdict::Inconclusive { assignment: Some(tau) },
        None => Verdict::Valid,
    })
}

/// Checks F[τ] ∈ W≤t for every τ ∈ 2^B.
pub fn is_strong_backdoor(f: &CnfFormula, b: &BTreeSet<Var>, t: usize) -> Result<BackdoorReport, BackdoorError> {
    is_strong_backdoor_with_cap(f, b, t, DEFAULT_VERTEX_CAP)
}

pub fn is_strong_backdoor_with_cap(
    f: &CnfFormula,
    b: &BTreeSet<Var>,
    t: usize,
    cap: usize,
) -> Result<BackdoorReport, BackdoorError> {
    check_subset(f, b)?;
    let verdict = strong_verdict(f, b, t, cap)?;
    Ok(BackdoorReport {
        backdoor: b.iter().copied().collect(),
        kind: BackdoorKind::Strong,
        t,
        verdict,
        stats: SearchStats { nodes: 1, checks: 1 << b.len() },
    })
}

/// Checks F − B ∈ W≤t.
pub fn is_deletion_backdoor(f: &CnfFormula, b: &BTreeSet<Var>, t: usize) -> Result<BackdoorReport, BackdoorError> {
    is_deletion_backdoor_with_cap(f, b, t, DEFAULT_VERTEX_CAP)
}

pub fn is_deletion_backdoor_with_cap(
    f: &CnfFormula,
    b: &BTreeSet<Var>,
    t: usize,
    cap: usize,
) -> Result<BackdoorReport, BackdoorError> {
    check_subset(f, b)?;
    let reduced = f.delete_vars(b)?;
    let verdict = match treewidth_at_most_with_cap(&Graph::incidence(&reduced), t, cap) {
        TwVerdict::AtMost { .. } => Verdict::Valid,
        TwVerdict::Exceeds { certificate } => Verdict::Invalid { assignment: None, certificate },
        TwVerdict::Unknown { .. } => Verdict::Inconclusive { assignment: None },
    };
    Ok(BackdoorReport {
        backdoor: b.iter().copied().collect(),
        kind: BackdoorKind::Deletion,
        t,
        verdict,
        stats: SearchStats { nodes: 1, checks: 1 },
    })
}

/// Variables that kill an obstruction W ⊆ V(inc(F)).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KillerSet {
    pub obstruction: BTreeSet<Vertex>,
    /// Variable vertices of W.
    pub internal: BTreeSet<Var>,
    /// Variables outside W occurring positively in one clause of W and
    /// negatively in another.
    pub external: BTreeSet<Var>,
}

impl KillerSet {
    /// Internal killers, then external ones, each ascending.
    pub fn branching_order(&self) -> Vec<Var> {
        self.internal.iter().chain(self.external.iter()).copied().collect()
    }
}

pub fn killer_set(f: &CnfFormula, w: &BTreeSet<Vertex>) -> KillerSet {
    let internal: BTreeSet<Var> = w.iter().filter_map(|v| v.as_var()).collect();
    let mut positive = BTreeSet::new();
    let mut negative = BTreeSet::new();
    for clause in w.iter().filter_map(|v| v.as_clause()).filter_map(|c| f.clause(c)) {
        for lit in clause.literals() {
            match lit.polarity() {
                Polarity::Positive => positive.insert(lit.var()),
                Polarity::Negative => negative.insert(lit.var()),
            };
        }
    }
    let external = positive.intersection(&negative).copied().filter(|x| !internal.contains(x)).collect();
    KillerSet { obstruction: w.clone(), internal, external }
}

/// Greedy single-pass deletion inside `start`: a vertex is dropped when
/// the rest still has treewidth above t.
pub fn minimize_obstruction(g: &Graph, start: &BTreeSet<Vertex>, t: usize, cap: usize) -> BTreeSet<Vertex> {
    let mut w = start.clone();
    for v in start.iter().copied() {
        w.remove(&v);
        if !treewidth_at_most_with_cap(&g.induced(&w), t, cap).is_exceeds() {
            w.insert(v);
        }
    }
    w
}

/// A vertex set of inc(F[τ]) inducing treewidth above t, shrunk greedily.
pub fn extract_witness(f: &CnfFormula, tau: &Assignment, t: usize) -> Result<BTreeSet<Vertex>, BackdoorError> {
    extract_witness_with_cap(f, tau, t, DEFAULT_VERTEX_CAP)
}

pub fn extract_witness_with_cap(
    f: &CnfFormula,
    tau: &Assignment,
    t: usize,
    cap: usize,
) -> Result<BTreeSet<Vertex>, BackdoorError> {
    let g = Graph::incidence(&f.reduce(tau)?);
    match treewidth_at_most_with_cap(&g, t, cap) {
        TwVerdict::Exceeds { certificate } => {
            let start = certificate.vertices();
            if let ExceedsCertificate::Cycle { .. } = certificate {
                // a cycle is already minimal at t = 1
                return Ok(start);
            }
            Ok(minimize_obstruction(&g, &start, t, cap))
        }
        TwVerdict::AtMost { .. } => Err(BackdoorError::NotAnObstruction(tau.clone())),
        TwVerdict::Unknown { .. } => Err(BackdoorError::Inconclusive(tau.clone())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(BackdoorReport),
    /// No strong backdoor of size ≤ k_max exists.
    NoneUpTo { k_max: usize, stats: SearchStats },
}

struct ExactSearch<'a> {
    f: &'a CnfFormula,
    t: usize,
    cap: usize,
    counters: &'a Counters,
    failed: HashSet<BTreeSet<Var>>,
}

impl ExactSearch<'_> {
    fn dfs(&mut self, b: &BTreeSet<Var>, budget: usize) -> Result<Option<BTreeSet<Var>>, BackdoorError> {
        if self.failed.contains(b) {
            return Ok(None);
        }
        self.counters.node();
        self.counters.checks(1 << b.len());
        let tau = match strong_verdict(self.f, b, self.t, self.cap)? {
            Verdict::Valid => return Ok(Some(b.clone())),
            Verdict::Inconclusive { assignment } => return Err(BackdoorError::Inconclusive(assignment.unwrap_or_default())),
            Verdict::Invalid { assignment, .. } => assignment.unwrap_or_default(),
        };
        if budget > 0 {
            let reduced = self.f.reduce(&tau)?;
            let w = extract_witness_with_cap(self.f, &tau, self.t, self.cap)?;
            self.counters.checks(w.len());
            for x in killer_set(&reduced, &w).branching_order() {
                let mut next = b.clone();
                next.insert(x);
                if let Some(found) = self.dfs(&next, budget - 1)? {
                    return Ok(Some(found));
                }
            }
        }
        self.failed.insert(b.clone());
        Ok(None)
    }
}

fn smallest_strong_backdoor(
    f: &CnfFormula,
    t: usize,
    k_max: usize,
    cap: usize,
    counters: &Counters,
) -> Result<Option<BTreeSet<Var>>, BackdoorError> {
    for k in 0..=k_max {
        let mut search = ExactSearch { f, t, cap, counters, failed: HashSet::new() };
        if let Some(b) = search.dfs(&BTreeSet::new(), k)? {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// A minimum strong backdoor of size ≤ k_max, or proof that none exists.
/// Each search node takes the first failing τ, extracts an obstruction W
/// from F[τ] and branches on the killers of W, which every extension to a
/// strong backdoor must contain.
pub fn find_smallest_strong_backdoor(f: &CnfFormula, t: usize, k_max: usize) -> Result<SearchOutcome, BackdoorError> {
    find_smallest_strong_backdoor_with_cap(f, t, k_max, DEFAULT_VERTEX_CAP)
}

pub fn find_smallest_strong_backdoor_with_cap(
    f: &CnfFormula,
    t: usize,
    k_max: usize,
    cap: usize,
) -> Result<SearchOutcome, BackdoorError> {
    if k_max > MAX_EXACT_K {
        return Err(BackdoorError::KMaxTooLarge(k_max));
    }
    let counters = Counters::default();
    Ok(match smallest_strong_backdoor(f, t, k_max, cap, &counters)? {
        Some(b) => SearchOutcome::Found(BackdoorReport {
            backdoor: b.into_iter().collect(),
            kind: BackdoorKind::Strong,
            t,
            verdict: Verdict::Valid,
            stats: counters.snapshot(),
        }),
        None => SearchOutcome::NoneUpTo { k_max, stats: counters.snapshot() },
    })
}

/// Supplies, for a formula whose incidence treewidth is large, variables
/// of which every strong backdoor of size ≤ k contains at least one.
pub trait CandidateProvider: Sync {
    fn candidates(&self, f: &CnfFormula, t: usize, k: usize, cap: usize) -> Result<Vec<Var>, BackdoorError>;

    fn name(&self) -> &'static str;
}

/// Killers of one obstruction extracted from inc(F).
#[derive(Debug, Clone, Copy, Default)]
pub struct KillerUnionProvider;

impl CandidateProvider for KillerUnionProvider {
    fn candidates(&self, f: &CnfFormula, t: usize, _k: usize, cap: usize) -> Result<Vec<Var>, BackdoorError> {
        let w = extract_witness_with_cap(f, &Assignment::new(), t, cap)?;
        Ok(killer_set(f, &w).branching_order())
    }

    fn name(&self) -> &'static str {
        "killer-union"
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ApproxConfig {
    /// Formulas with incidence treewidth at most this go to the exact search.
    pub tw_threshold: usize,
    pub vertex_cap: usize,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig { tw_threshold: DEFAULT_TW_THRESHOLD, vertex_cap: DEFAULT_VERTEX_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApproxOutcome {
    /// A verified strong backdoor of size ≤ 2^k − 1.
    Found(BackdoorReport),
    /// sb_t(F) > k.
    Exceeds { k: usize, stats: SearchStats },
}

struct Approx<'a> {
    t: usize,
    config: ApproxConfig,
    provider: &'a dyn CandidateProvider,
    counters: Counters,
}

impl Approx<'_> {
    fn solve(&self, f: &CnfFormula, k: usize) -> Result<Option<BTreeSet<Var>>, BackdoorError> {
        self.counters.node();
        self.counters.checks(1);
        let verdict = treewidth_at_most_with_cap(&Graph::incidence(f), self.config.tw_threshold.max(self.t), self.config.vertex_cap);
        match verdict {
            TwVerdict::AtMost { .. } => {
                return smallest_strong_backdoor(f, self.t, k, self.config.vertex_cap, &self.counters);
            }
            TwVerdict::Unknown { .. } => return Err(BackdoorError::Inconclusive(Assignment::new())),
            TwVerdict::Exceeds { .. } if k == 0 => return Ok(None),
            TwVerdict::Exceeds { .. } => {}
        }
        for x in self.provider.candidates(f, self.t, k, self.config.vertex_cap)? {
            let (neg, pos) = rayon::join(
                || -> Result<_, BackdoorError> { self.solve(&f.reduce(&Assignment::single(x, false))?, k - 1) },
                || -> Result<_, BackdoorError> { self.solve(&f.reduce(&Assignment::single(x, true))?, k - 1) },
            );
            if let (Some(b0), Some(b1)) = (neg?, pos?) {
                let mut b: BTreeSet<Var> = b0.union(&b1).copied().collect();
                b.insert(x);
                return Ok(Some(b));
            }
        }
        Ok(None)
    }
}

/// The recursion s(k) ≤ 1 + 2·s(k − 1): below the treewidth threshold
/// use the exact search, otherwise branch on each candidate x and join
/// {x} with backdoors of F[x=0] and F[x=1] for k − 1.
pub fn approx_backdoor(
    f: &CnfFormula,
    t: usize,
    k: usize,
    config: ApproxConfig,
    provider: &dyn CandidateProvider,
) -> Result<ApproxOutcome, BackdoorError> {
    let driver = Approx { t, config, provider, counters: Counters::default() };
    match driver.solve(f, k)? {
        Some(b) => {
            let mut report = is_strong_backdoor_with_cap(f, &b, t, config.vertex_cap)?;
            debug_assert!(report.backdoor.len() < 1 << k || report.backdoor.is_empty());
            let stats = driver.counters.snapshot();
            report.stats = SearchStats { nodes: stats.nodes, checks: stats.checks + report.stats.checks };
            Ok(ApproxOutcome::Found(report))
        }
        None => Ok(ApproxOutcome::Exceeds { k, stats: driver.counters.snapshot() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;

    fn f(clauses: &[&[i64]]) -> CnfFormula {
        CnfFormula::from_clauses(clauses.iter().map(|c| c.iter().copied())).unwrap()
    }

    /// F_n with x = n² + 1 added positively to horizontal and negatively
    /// to vertical clauses, built directly here.
    fn grid_x(n: i64, with_x: bool) -> CnfFormula {
        let x = n * n + 1;
        let mut cl = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = i * n + j + 1;
                if j + 1 < n {
                    let mut c = vec![v, v + 1];
                    if with_x {
                        c.push(x);
                    }
                    cl.push(c);
                }
                if i + 1 < n {
                    let mut c = vec![v, v + n];
                    if with_x {
                        c.push(-x);
                    }
                    cl.push(c);
                }
            }
        }
        CnfFormula::from_clauses(cl).unwrap()
    }

    /// Smallest strong backdoor by trying every subset in size order.
    fn oracle_sb(f: &CnfFormula, t: usize, k_max: usize) -> Option<usize> {
        let vars: Vec<Var> = f.vars().into_iter().collect();
        (0..=k_max.min(vars.len())).find(|&k| {
            vars.iter().copied().combinations(k).any(|b| {
                let b: BTreeSet<Var> = b.into_iter().collect();
                crate::formula::assignments(&b).unwrap().all(|tau| {
                    crate::treewidth::exact_treewidth(&Graph::incidence(&f.reduce(&tau).unwrap()), 64).unwrap().0
                        <= t as isize
                })
            })
        })
    }

    #[test]
    fn grid_x_backdoor() {
        let g = grid_x(3, true);
        let x = BTreeSet::from([10]);
        assert!(is_strong_backdoor(&g, &x, 1).unwrap().is_valid());
        let empty = is_strong_backdoor(&g, &BTreeSet::new(), 1).unwrap();
        assert!(matches!(empty.verdict, Verdict::Invalid { .. }));
        let del = is_deletion_backdoor(&g, &x, 1).unwrap();
        assert!(matches!(del.verdict, Verdict::Invalid { assignment: None, .. }));
    }

    #[test]
    fn trivial_backdoors() {
        let tree = f(&[&[1, 2], &[-2, 3]]);
        assert!(is_strong_backdoor(&tree, &BTreeSet::new(), 1).unwrap().is_valid());
        assert!(is_deletion_backdoor(&tree, &BTreeSet::new(), 1).unwrap().is_valid());
        // one cycle: v1 c1 v2 c2
        let cyc = f(&[&[1, 2], &[-1, -2]]);
        assert!(!is_deletion_backdoor(&cyc, &BTreeSet::new(), 1).unwrap().is_valid());
        assert!(is_deletion_backdoor(&cyc, &BTreeSet::from([1]), 1).unwrap().is_valid());
    }

    #[test]
    fn input_checks() {
        let g = f(&[&[1, 2]]).with_free_var(3).unwrap();
        assert_eq!(is_strong_backdoor(&g, &BTreeSet::from([3]), 1).unwrap_err(), BackdoorError::NotInFormula(3));
        let big = CnfFormula::from_clauses((1..=21).map(|v| vec![v])).unwrap();
        let all: BTreeSet<Var> = big.vars();
        assert!(matches!(is_strong_backdoor(&big, &all, 1), Err(BackdoorError::TooLarge { .. })));
        assert_eq!(find_smallest_strong_backdoor(&g, 1, 7).unwrap_err(), BackdoorError::KMaxTooLarge(7));
    }

    #[test]
    fn killer_examples() {
        let g = f(&[&[1, 2], &[-1, 2]]);
        let w = BTreeSet::from([Vertex::Clause(1), Vertex::Clause(2), Vertex::Var(2)]);
        let ks = killer_set(&g, &w);
        assert_eq!(ks.external, BTreeSet::from([1]));
        assert_eq!(ks.internal, BTreeSet::from([2]));
        let same_sign = f(&[&[1, 2], &[1, 3]]);
        let w2 = BTreeSet::from([Vertex::Clause(1), Vertex::Clause(2)]);
        assert!(killer_set(&same_sign, &w2).external.is_empty());
    }

    #[test]
    fn witness_examples() {
        let cyc = f(&[&[1, 2], &[-1, -2]]);
        let w = extract_witness(&cyc, &Assignment::new(), 1).unwrap();
        assert_eq!(w.len(), 4);
        let grid = grid_x(3, false);
        let w = extract_witness(&grid, &Assignment::new(), 1).unwrap();
        assert!(w.len() >= 8);
        assert!(Graph::incidence(&grid).induced(&w).find_cycle().is_some());
        assert!(matches!(extract_witness(&f(&[&[1]]), &Assignment::new(), 1), Err(BackdoorError::NotAnObstruction(_))));
    }

    #[test]
    fn k5_witness_is_k5() {
        let mut g = Graph::new();
        for a in 1..=5 {
            for b in a + 1..=5 {
                g.add_edge(Vertex::Plain(a), Vertex::Plain(b)).unwrap();
            }
        }
        for i in 6..10 {
            g.add_edge(Vertex::Plain(i), Vertex::Plain(i + 1)).unwrap();
            g.add_edge(Vertex::Plain(1), Vertex::Plain(i)).unwrap();
        }
        let w = minimize_obstruction(&g, &g.vertex_set(), 3, 48);
        assert_eq!(w, (1..=5).map(Vertex::Plain).collect());
    }

    #[test]
    fn exact_search_examples() {
        let g = grid_x(3, true);
        match find_smallest_strong_backdoor(&g, 1, 2).unwrap() {
            SearchOutcome::Found(r) => assert_eq!(r.backdoor, vec![10]),
            other => panic!("{other:?}"),
        }
        let tree = f(&[&[1, 2], &[-2, 3]]);
        match find_smallest_strong_backdoor(&tree, 1, 2).unwrap() {
            SearchOutcome::Found(r) => assert!(r.backdoor.is_empty()),
            other => panic!("{other:?}"),
        }
        assert!(matches!(find_smallest_strong_backdoor(&grid_x(3, false), 1, 0).unwrap(), SearchOutcome::NoneUpTo { .. }));
    }

    #[test]
    fn approx_examples() {
        let cfg = ApproxConfig { tw_threshold: 1, ..ApproxConfig::default() };
        let g = grid_x(3, true);
        match approx_backdoor(&g, 1, 1, cfg, &KillerUnionProvider).unwrap() {
            ApproxOutcome::Found(r) => {
                assert_eq!(r.backdoor, vec![10]);
                assert!(r.is_valid());
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(approx_backdoor(&grid_x(3, false), 1, 0, cfg, &KillerUnionProvider).unwrap(), ApproxOutcome::Exceeds { k: 0, .. }));
        // default threshold sends F_3^x straight to the exact search
        assert!(matches!(approx_backdoor(&g, 1, 1, ApproxConfig::default(), &KillerUnionProvider).unwrap(), ApproxOutcome::Found(_)));
    }

    #[test]
    fn grid_needs_more_than_one() {
        // F_3 has no strong W≤1 backdoor of size 1
        assert_eq!(oracle_sb(&grid_x(3, false), 1, 1), None);
        let cfg = ApproxConfig { tw_threshold: 1, ..ApproxConfig::default() };
        assert!(matches!(approx_backdoor(&grid_x(3, false), 1, 1, cfg, &KillerUnionProvider).unwrap(), ApproxOutcome::Exceeds { .. }));
    }

    fn arb_formula() -> impl Strategy<Value = CnfFormula> {
        let clause = proptest::collection::btree_map(1i64..=7, any::<bool>(), 2..=3)
            .prop_map(|m| m.into_iter().map(|(v, s)| if s { v } else { -v }).collect::<Vec<i64>>());
        proptest::collection::vec(clause, 1..=9).prop_map(|cl| CnfFormula::from_clauses(cl).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn exact_search_matches_subset_oracle(g in arb_formula()) {
            let expected = oracle_sb(&g, 1, 2);
            match find_smallest_strong_backdoor(&g, 1, 2).unwrap() {
                SearchOutcome::Found(r) => {
                    prop_assert_eq!(Some(r.backdoor.len()), expected);
                    prop_assert!(is_strong_backdoor(&g, &r.set(), 1).unwrap().is_valid());
                }
                SearchOutcome::NoneUpTo { .. } => prop_assert_eq!(expected, None),
            }
        }

        #[test]
        fn approx_is_sound(g in arb_formula(), k in 0usize..3) {
            let cfg = ApproxConfig { tw_threshold: 1, ..ApproxConfig::default() };
            let sb = oracle_sb(&g, 1, k);
            match approx_backdoor(&g, 1, k, cfg, &KillerUnionProvider).unwrap() {
                ApproxOutcome::Found(r) => {
                    prop_assert!(r.is_valid());
                    prop_assert!(r.backdoor.len() < (1 << k) || r.backdoor.is_empty());
                }
                ApproxOutcome::Exceeds { .. } => prop_assert_eq!(sb, None),
            }
        }

        #[test]
        fn deletion_implies_strong_and_supersets_stay_valid(g in arb_formula(), pick in proptest::collection::btree_set(1u32..8, 0..4)) {
            let b: BTreeSet<Var> = pick.into_iter().filter(|v| g.vars().contains(v)).collect();
            if is_deletion_backdoor(&g, &b, 1).unwrap().is_valid() {
                prop_assert!(is_strong_backdoor(&g, &b, 1).unwrap().is_valid());
            }
            if is_strong_backdoor(&g, &b, 1).unwrap().is_valid() {
                for extra in g.vars() {
                    let mut bigger = b.clone();
                    bigger.insert(extra);
                    prop_assert!(is_strong_backdoor(&g, &bigger, 1).unwrap().is_valid());
                }
            }
        }
    }
}
