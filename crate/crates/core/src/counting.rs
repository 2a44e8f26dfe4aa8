//! Model counting: brute force, a dynamic program over nice tree
//! decompositions of the incidence graph, and counting through a strong
//! backdoor set.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::backdoor::{approx_backdoor, ApproxConfig, ApproxOutcome, BackdoorError, CandidateProvider, KillerUnionProvider};
use crate::formula::{assignments_capped, Assignment, Assignments, CnfFormula, FormulaError, Polarity, Var};
use crate::graph::{Graph, Vertex};
use crate::treewidth::{
    treewidth_at_most_with_cap, upper_bound_heuristic, validate_decomposition, TreeDecomposition, TwVerdict,
    Violation, Width, DEFAULT_VERTEX_CAP,
};

pub type ModelCount = BigUint;

/// Variable cap of the brute-force counter.
pub const BRUTEFORCE_CAP: usize = 30;
/// Backdoor size cap for enumerating 2^|B| branches.
pub const BRANCH_CAP: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(Violation),
    #[error("decomposition bag of {0} vertices is too wide for the dynamic program")]
    BagTooWide(usize),
    #[error("not a strong backdoor: F[{assignment}] has incidence treewidth above {t}")]
    BackdoorInvalid { assignment: Assignment, t: usize },
    #[error("could not decide whether F[{assignment}] has incidence treewidth at most {t}")]
    BackdoorInconclusive { assignment: Assignment, t: usize },
    #[error(transparent)]
    Backdoor(#[from] BackdoorError),
}

/// Exact count over all total assignments of var(F) ∪ free(F).
pub fn count_bruteforce(f: &CnfFormula) -> Result<ModelCount, CountError> {
    let vars: Vec<Var> = f.vars().into_iter().collect();
    let total = vars.len() + f.free_vars().len();
    if total > BRUTEFORCE_CAP {
        return Err(FormulaError::AssignmentCapExceeded { size: total, cap: BRUTEFORCE_CAP }.into());
    }
    let pos: BTreeMap<Var, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let masks: Vec<(u32, u32)> = f
        .clauses()
        .iter()
        .map(|c| {
            c.literals().iter().fold((0u32, 0u32), |(p, n), l| match l.polarity() {
                Polarity::Positive => (p | 1 << pos[&l.var()], n),
                Polarity::Negative => (p, n | 1 << pos[&l.var()]),
            })
        })
        .collect();
    let models = (0u64..1 << vars.len())
        .into_par_iter()
        .filter(|&a| {
            let a = a as u32;
            masks.iter().all(|&(p, n)| a & p != 0 || !a & n != 0)
        })
        .count();
    Ok(BigUint::from(models) << f.free_vars().len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NiceNode {
    Leaf,
    Introduce { vertex: Vertex, child: usize },
    Forget { vertex: Vertex, child: usize },
    Join { left: usize, right: usize },
}

/// A rooted nice tree decomposition. Nodes are stored children first; the
/// last node is the root and has an empty bag, as do the leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceDecomposition {
    pub nodes: Vec<NiceNode>,
    pub bags: Vec<Vec<Vertex>>,
}

impl NiceDecomposition {
    pub fn from_decomposition(td: &TreeDecomposition) -> Self {
        let mut nice = NiceDecomposition { nodes: Vec::new(), bags: Vec::new() };
        let adj = td.adjacency();
        let n = td.len();
        if n == 0 {
            nice.push(NiceNode::Leaf, Vec::new());
            return nice;
        }
        // iterative post-order from bag 0
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0usize];
        let mut seen = vec![false; n];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            order.push(i);
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    parent[j] = i;
                    stack.push(j);
                }
            }
        }
        let mut top: Vec<Option<usize>> = vec![None; n];
        let mut pending: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &i in order.iter().rev() {
            let target: Vec<Vertex> = td.bags()[i].iter().copied().collect();
            let mut branches: Vec<usize> = std::mem::take(&mut pending[i])
                .into_iter()
                .map(|c| nice.morph(top[c].expect("child built"), &target))
                .collect();
            if branches.is_empty() {
                let leaf = nice.push(NiceNode::Leaf, Vec::new());
                branches.push(nice.morph(leaf, &target));
            }
            let mut node = branches[0];
            for &b in &branches[1..] {
                node = nice.push(NiceNode::Join { left: node, right: b }, target.clone());
            }
            top[i] = Some(node);
            if parent[i] != usize::MAX {
                pending[parent[i]].push(i);
            }
        }
        nice.morph(top[0].expect("root built"), &[]);
        nice
    }

    fn push(&mut self, node: NiceNode, bag: Vec<Vertex>) -> usize {
        self.nodes.push(node);
        self.bags.push(bag);
        self.nodes.len() - 1
    }

    /// Forget, then introduce, until the bag equals `target`.
    fn morph(&mut self, mut node: usize, target: &[Vertex]) -> usize {
        let want: BTreeSet<Vertex> = target.iter().copied().collect();
        let have: Vec<Vertex> = self.bags[node].clone();
        for v in have.iter().filter(|v| !want.contains(v)) {
            let bag: Vec<Vertex> = self.bags[node].iter().copied().filter(|u| u != v).collect();
            node = self.push(NiceNode::Forget { vertex: *v, child: node }, bag);
        }
        for &v in target {
            if !self.bags[node].contains(&v) {
                let mut bag = self.bags[node].clone();
                let at = bag.partition_point(|&u| u < v);
                bag.insert(at, v);
                node = self.push(NiceNode::Introduce { vertex: v, child: node }, bag);
            }
        }
        node
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn width(&self) -> Width {
        self.bags.iter().map(|b| b.len() as Width).max().unwrap_or(0) - 1
    }
}

fn insert_bit(state: u64, pos: usize, bit: bool) -> u64 {
    let low = state & ((1u64 << pos) - 1);
    let high = (state >> pos) << (pos + 1);
    high | low | (u64::from(bit) << pos)
}

fn remove_bit(state: u64, pos: usize) -> u64 {
    let low = state & ((1u64 << pos) - 1);
    let high = (state >> (pos + 1)) << pos;
    high | low
}

type Table = FxHashMap<u64, BigUint>;

fn add_to(table: &mut Table, key: u64, value: BigUint) {
    if value.is_zero() {
        return;
    }
    *table.entry(key).or_default() += value;
}

/// The incidence DP. A state assigns one bit per bag vertex: the value of
/// a variable, or whether a clause is already satisfied by an introduced
/// variable.
fn run_dp(f: &CnfFormula, nice: &NiceDecomposition) -> BigUint {
    let clauses: FxHashMap<u32, &crate::formula::Clause> = f.clauses().iter().map(|c| (c.id(), c)).collect();
    let literal = |c: u32, v: u32| clauses.get(&c).and_then(|cl| cl.literal_of(v));
    let mut tables: Vec<Option<Table>> = vec![None; nice.nodes.len()];
    let mut uses = vec![0usize; nice.nodes.len()];
    for node in &nice.nodes {
        match *node {
            NiceNode::Introduce { child, .. } | NiceNode::Forget { child, .. } => uses[child] += 1,
            NiceNode::Join { left, right } => {
                uses[left] += 1;
                uses[right] += 1;
            }
            NiceNode::Leaf => {}
        }
    }
    let mut take = |tables: &mut Vec<Option<Table>>, i: usize| -> Table {
        uses[i] -= 1;
        if uses[i] == 0 {
            tables[i].take().expect("child table")
        } else {
            tables[i].clone().expect("child table")
        }
    };

    for (i, node) in nice.nodes.iter().enumerate() {
        let bag = &nice.bags[i];
        let table = match *node {
            NiceNode::Leaf => Table::from_iter([(0u64, BigUint::one())]),
            NiceNode::Introduce { vertex, child } => {
                let pos = bag.iter().position(|&u| u == vertex).expect("introduced vertex in bag");
                let input = take(&mut tables, child);
                let mut out = Table::default();
                match vertex {
                    Vertex::Var(x) => {
                        for (state, count) in input {
                            for value in [false, true] {
                                let mut s = insert_bit(state, pos, value);
                                for (j, &u) in bag.iter().enumerate() {
                                    if let Vertex::Clause(c) = u {
                                        if literal(c, x).is_some_and(|l| l.eval(value)) {
                                            s |= 1 << j;
                                        }
                                    }
                                }
                                add_to(&mut out, s, count.clone());
                            }
                        }
                    }
                    Vertex::Clause(c) => {
                        for (state, count) in input {
                            let s = insert_bit(state, pos, false);
                            let sat = bag.iter().enumerate().any(|(j, &u)| match u {
                                Vertex::Var(x) => literal(c, x).is_some_and(|l| l.eval(s >> j & 1 == 1)),
                                _ => false,
                            });
                            add_to(&mut out, s | u64::from(sat) << pos, count);
                        }
                    }
                    Vertex::Plain(_) => unreachable!("incidence graphs have no plain vertices"),
                }
                out
            }
            NiceNode::Forget { vertex, child } => {
                let pos = nice.bags[child].iter().position(|&u| u == vertex).expect("forgotten vertex in child bag");
                let input = take(&mut tables, child);
                let mut out = Table::default();
                let is_clause = matches!(vertex, Vertex::Clause(_));
                for (state, count) in input {
                    if is_clause && state >> pos & 1 == 0 {
                        continue;
                    }
                    add_to(&mut out, remove_bit(state, pos), count);
                }
                out
            }
            NiceNode::Join { left, right } => {
                let var_mask = bag
                    .iter()
                    .enumerate()
                    .filter(|(_, u)| matches!(u, Vertex::Var(_)))
                    .fold(0u64, |m, (j, _)| m | 1 << j);
                let a = take(&mut tables, left);
                let b = take(&mut tables, right);
                let mut by_vars: FxHashMap<u64, Vec<(u64, &BigUint)>> = FxHashMap::default();
                for (s, c) in &b {
                    by_vars.entry(s & var_mask).or_default().push((*s, c));
                }
                let mut out = Table::default();
                for (s, c) in &a {
                    if let Some(partners) = by_vars.get(&(s & var_mask)) {
                        for &(s2, c2) in partners {
                            add_to(&mut out, s | s2, c * c2);
                        }
                    }
                }
                out
            }
        };
        tables[i] = Some(table);
    }
    let root = nice.root();
    tables[root].take().and_then(|t| t.get(&0).cloned()).unwrap_or_default()
}

/// Counts models with a decomposition of inc(F). Free variables that the
/// decomposition omits contribute a factor 2 each.
pub fn count_td(f: &CnfFormula, td: &TreeDecomposition) -> Result<ModelCount, CountError> {
    let mut g = Graph::incidence(f);
    let present: BTreeSet<Vertex> = td.bags().iter().flatten().copied().collect();
    let omitted: Vec<Vertex> =
        f.free_vars().iter().map(|&v| Vertex::Var(v)).filter(|v| !present.contains(v)).collect();
    for &v in &omitted {
        g.remove_vertex(v);
    }
    validate_decomposition(&g, td).map_err(CountError::InvalidDecomposition)?;
    if let Some(bag) = td.bags().iter().find(|b| b.len() > 63) {
        return Err(CountError::BagTooWide(bag.len()));
    }
    let nice = NiceDecomposition::from_decomposition(td);
    Ok(run_dp(f, &nice) << omitted.len())
}

/// Counts with the min-fill decomposition of inc(F).
pub fn count_heuristic(f: &CnfFormula) -> Result<ModelCount, CountError> {
    let (_, td) = upper_bound_heuristic(&Graph::incidence(f));
    count_td(f, &td)
}

/// Whether a backdoor's branches must pass the treewidth test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchCheck {
    /// Each F[τ] must be decided to have incidence treewidth ≤ t.
    #[default]
    Verify,
    /// Branches failing the test are counted with a heuristic
    /// decomposition instead of being rejected.
    Trust,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchInfo {
    pub assignment: Assignment,
    pub width: Width,
    /// Variables outside B that vanish from F[τ].
    pub vanished: usize,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub count: ModelCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BackdoorCount {
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub count: ModelCount,
    pub branches: Vec<BranchInfo>,
}

/// Σ over τ ∈ 2^B of 2^d(F,τ) · #(F[τ]).
pub fn count_via_backdoor(f: &CnfFormula, b: &BTreeSet<Var>, t: usize) -> Result<BackdoorCount, CountError> {
    count_via_backdoor_with(f, b, t, BranchCheck::Verify, DEFAULT_VERTEX_CAP)
}

pub fn count_via_backdoor_with(
    f: &CnfFormula,
    b: &BTreeSet<Var>,
    t: usize,
    check: BranchCheck,
    vertex_cap: usize,
) -> Result<BackdoorCount, CountError> {
    let order: Vec<Var> = b.iter().copied().collect();
    let total = assignments_capped(b, BRANCH_CAP)?.total();
    let vars = f.vars();
    let branch = |index: u64| -> Result<BranchInfo, CountError> {
        let tau = Assignments::nth_assignment(&order, index);
        let reduced = f.reduce(&tau)?;
        let remaining = reduced.vars();
        let vanished = vars.iter().filter(|v| !b.contains(v) && !remaining.contains(v)).count();
        let g = Graph::incidence(&reduced);
        let td = match treewidth_at_most_with_cap(&g, t, vertex_cap) {
            TwVerdict::AtMost { decomposition } => decomposition,
            verdict if check == BranchCheck::Trust => {
                log::debug!("trusting branch {tau} despite verdict {verdict:?}");
                upper_bound_heuristic(&g).1
            }
            TwVerdict::Exceeds { .. } => return Err(CountError::BackdoorInvalid { assignment: tau, t }),
            TwVerdict::Unknown { .. } => return Err(CountError::BackdoorInconclusive { assignment: tau, t }),
        };
        let count = count_td(&reduced, &td)? << vanished;
        Ok(BranchInfo { assignment: tau, width: td.width(), vanished, count })
    };
    let branches: Vec<BranchInfo> = (0..total).into_par_iter().map(branch).collect::<Result<_, _>>()?;
    let count = branches.iter().map(|br| &br.count).sum();
    Ok(BackdoorCount { count, branches })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveConfig {
    pub t: usize,
    pub k: usize,
    /// Count directly when tw(inc(F)) is at most this; `None` means t.
    pub tw_threshold: Option<usize>,
    pub vertex_cap: usize,
}

impl SolveConfig {
    pub fn new(t: usize, k: usize) -> Self {
        SolveConfig { t, k, tw_threshold: None, vertex_cap: DEFAULT_VERTEX_CAP }
    }

    pub fn threshold(&self) -> usize {
        self.tw_threshold.unwrap_or(self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum CountPath {
    /// The formula has an empty clause.
    EmptyClause,
    Direct { width: Width },
    Backdoor { backdoor: Vec<Var>, branches: Vec<BranchInfo> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum SolveOutcome {
    Counted {
        #[serde(serialize_with = "crate::serialize_decimal")]
        count: ModelCount,
        #[serde(flatten)]
        path: CountPath,
    },
    /// sb_t(F) > k.
    BackdoorExceeded { k: usize },
    /// A treewidth question could not be decided within the caps.
    Inconclusive { reason: String },
}

impl SolveOutcome {
    pub fn count(&self) -> Option<&ModelCount> {
        match self {
            SolveOutcome::Counted { count, .. } => Some(count),
            _ => None,
        }
    }
}

/// Counts directly when inc(F) is below the threshold; otherwise finds a
/// strong backdoor of size ≤ 2^k − 1 and counts through it, or reports
/// sb_t(F) > k.
pub fn solve(f: &CnfFormula, config: SolveConfig) -> Result<SolveOutcome, CountError> {
    solve_with(f, config, &KillerUnionProvider)
}

pub fn solve_with(f: &CnfFormula, config: SolveConfig, provider: &dyn CandidateProvider) -> Result<SolveOutcome, CountError> {
    if f.has_empty_clause() {
        log::info!("formula contains an empty clause; count is 0");
        return Ok(SolveOutcome::Counted { count: BigUint::zero(), path: CountPath::EmptyClause });
    }
    let g = Graph::incidence(f);
    match treewidth_at_most_with_cap(&g, config.threshold(), config.vertex_cap) {
        TwVerdict::AtMost { decomposition } => {
            let count = count_td(f, &decomposition)?;
            return Ok(SolveOutcome::Counted { count, path: CountPath::Direct { width: decomposition.width() } });
        }
        TwVerdict::Unknown { lower, upper } => {
            return Ok(SolveOutcome::Inconclusive {
                reason: format!("incidence treewidth in [{lower}, {upper}] against threshold {}", config.threshold()),
            });
        }
        TwVerdict::Exceeds { .. } => {}
    }
    let approx = ApproxConfig { tw_threshold: config.threshold(), vertex_cap: config.vertex_cap };
    let report = match approx_backdoor(f, config.t, config.k, approx, provider) {
        Ok(ApproxOutcome::Found(report)) => report,
        Ok(ApproxOutcome::Exceeds { k, .. }) => return Ok(SolveOutcome::BackdoorExceeded { k }),
        Err(e @ (BackdoorError::Inconclusive(_) | BackdoorError::TooLarge { .. })) => {
            return Ok(SolveOutcome::Inconclusive { reason: e.to_string() });
        }
        Err(e) => return Err(CountError::Backdoor(e)),
    };
    let b = report.set();
    let counted = count_via_backdoor_with(f, &b, config.t, BranchCheck::Verify, config.vertex_cap)?;
    Ok(SolveOutcome::Counted {
        count: counted.count,
        path: CountPath::Backdoor { backdoor: report.backdoor, branches: counted.branches },
    })
}
