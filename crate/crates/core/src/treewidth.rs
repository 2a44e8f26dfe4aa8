//! Tree decompositions: validation, degeneracy lower bound, min-fill upper
//! bound, exact treewidth for small graphs and the decision tw(G) ≤ t.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rustc_hash::FxHashMap;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, Vertex};

/// Treewidth values; the empty graph has width −1.
pub type Width = isize;

pub const DEFAULT_VERTEX_CAP: usize = 48;
/// Hard limit of the bitset-based exact solver.
pub const MAX_VERTEX_CAP: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeDecomposition {
    bags: Vec<BTreeSet<Vertex>>,
    edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn new(bags: Vec<BTreeSet<Vertex>>, edges: Vec<(usize, usize)>) -> Self {
        TreeDecomposition { bags, edges }
    }

    /// One bag holding every vertex.
    pub fn single_bag(vertices: impl IntoIterator<Item = Vertex>) -> Self {
        TreeDecomposition::new(vec![vertices.into_iter().collect()], Vec::new())
    }

    pub fn bags(&self) -> &[BTreeSet<Vertex>] {
        &self.bags
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn width(&self) -> Width {
        self.bags.iter().map(|b| b.len() as Width).max().unwrap_or(0) - 1
    }

    /// Joins two decompositions of disjoint graphs by a tree edge between
    /// their first bags.
    pub fn append(&mut self, other: TreeDecomposition) {
        let offset = self.bags.len();
        if other.bags.is_empty() {
            return;
        }
        if offset > 0 {
            self.edges.push((0, offset));
        }
        self.bags.extend(other.bags);
        self.edges.extend(other.edges.into_iter().map(|(a, b)| (a + offset, b + offset)));
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.bags.len()];
        for &(a, b) in &self.edges {
            if a < adj.len() && b < adj.len() {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("decomposition has no bags")]
    NoBags,
    #[error("tree edges do not form a tree: {0}")]
    NotATree(String),
    #[error("edge {0}-{1} is in no bag")]
    EdgeUncovered(Vertex, Vertex),
    #[error("vertex {0} is in no bag")]
    VertexMissing(Vertex),
    #[error("bags containing {0} are not connected")]
    Disconnected(Vertex),
    #[error("bag mentions {0}, which is not in the graph")]
    UnknownVertex(Vertex),
}

/// Checks the tree shape, edge coverage, vertex coverage and the
/// connectivity condition, reporting the first violation found.
pub fn validate_decomposition(g: &Graph, td: &TreeDecomposition) -> Result<(), Violation> {
    let n = td.bags.len();
    if n == 0 {
        return Err(Violation::NoBags);
    }
    if td.edges.len() != n - 1 {
        return Err(Violation::NotATree(format!("{} bags but {} edges", n, td.edges.len())));
    }
    if let Some(&(a, b)) = td.edges.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
        return Err(Violation::NotATree(format!("bad edge {a}-{b}")));
    }
    let adj = td.adjacency();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Violation::NotATree("not connected".into()));
    }

    let mut holders: BTreeMap<Vertex, Vec<usize>> = BTreeMap::new();
    for (i, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if !g.contains(v) {
                return Err(Violation::UnknownVertex(v));
            }
            holders.entry(v).or_default().push(i);
        }
    }
    for v in g.vertices() {
        if !holders.contains_key(&v) {
            return Err(Violation::VertexMissing(v));
        }
    }
    for (u, v) in g.edges() {
        if !td.bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            return Err(Violation::EdgeUncovered(u, v));
        }
    }
    for (&v, idx) in &holders {
        let inside: BTreeSet<usize> = idx.iter().copied().collect();
        let mut reached = BTreeSet::from([idx[0]]);
        let mut stack = vec![idx[0]];
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if inside.contains(&j) && reached.insert(j) {
                    stack.push(j);
                }
            }
        }
        if reached.len() != inside.len() {
            return Err(Violation::Disconnected(v));
        }
    }
    Ok(())
}

/// Degeneracy of `g` together with a subgraph attaining it: every vertex
/// of the returned core has at least `degeneracy` neighbors inside it.
pub fn degeneracy_core(g: &Graph) -> (Width, BTreeSet<Vertex>) {
    if g.is_empty() {
        return (-1, BTreeSet::new());
    }
    let mut remaining = g.vertex_set();
    let mut degree: BTreeMap<Vertex, usize> = g.vertices().map(|v| (v, g.degree(v))).collect();
    let mut best = 0usize;
    let mut best_core = remaining.clone();
    while !remaining.is_empty() {
        let &v = remaining.iter().min_by_key(|&&v| (degree[&v], v)).expect("nonempty");
        let d = degree[&v];
        if d > best {
            best = d;
            best_core = remaining.clone();
        }
        remaining.remove(&v);
        for u in g.neighbors(v) {
            if remaining.contains(&u) {
                *degree.get_mut(&u).expect("tracked") -= 1;
            }
        }
    }
    (best as Width, best_core)
}

/// Degeneracy lower bound on treewidth; −1 for the empty graph.
pub fn lower_bound(g: &Graph) -> Width {
    degeneracy_core(g).0
}

/// Decomposition from a min-fill elimination ordering, ties broken by the
/// smallest vertex.
pub fn upper_bound_heuristic(g: &Graph) -> (Width, TreeDecomposition) {
    if g.is_empty() {
        return (-1, TreeDecomposition::single_bag([]));
    }
    let (labels, adj_list) = g.indexed();
    let n = labels.len();
    let mut adj: Vec<BTreeSet<usize>> = adj_list.into_iter().map(|a| a.into_iter().collect()).collect();
    let mut alive = vec![true; n];
    let mut position = vec![usize::MAX; n];
    let mut bags: Vec<(usize, Vec<usize>)> = Vec::with_capacity(n);

    let fill = |adj: &[BTreeSet<usize>], v: usize| -> usize {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !adj[a].contains(&b) {
                    missing += 1;
                }
            }
        }
        missing
    };

    for step in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (fill(&adj, v), v))
            .expect("a live vertex remains");
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nb {
            adj[a].remove(&v);
        }
        adj[v].clear();
        alive[v] = false;
        position[v] = step;
        bags.push((v, nb));
    }

    let mut td_bags = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for (i, (v, nb)) in bags.iter().enumerate() {
        let mut bag: BTreeSet<Vertex> = nb.iter().map(|&u| labels[u]).collect();
        bag.insert(labels[*v]);
        td_bags.push(bag);
        // neighbors are all eliminated later; attach to the earliest one
        let parent = nb.iter().map(|&u| position[u]).min();
        match parent {
            Some(p) => edges.push((i, p)),
            None if i + 1 < n => edges.push((i, i + 1)),
            None => {}
        }
    }
    let td = TreeDecomposition::new(td_bags, edges);
    (td.width(), td)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreewidthError {
    #[error("graph has {vertices} vertices, above the exact-solver cap of {cap}")]
    VertexCapExceeded { vertices: usize, cap: usize },
}

/// Evidence that tw(G) > t.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExceedsCertificate {
    /// t = 0 and G has this edge.
    HasEdge { u: Vertex, v: Vertex },
    /// t = 1 and G has this cycle.
    Cycle { cycle: Vec<Vertex> },
    /// A subgraph of minimum degree above t.
    Degeneracy { core: BTreeSet<Vertex>, min_degree: usize },
    /// The exact search found this connected component infeasible.
    ExhaustiveSearch { component: BTreeSet<Vertex>, states: usize },
}

impl ExceedsCertificate {
    /// Vertices of a subgraph that alone has treewidth above the bound.
    pub fn vertices(&self) -> BTreeSet<Vertex> {
        match self {
            ExceedsCertificate::HasEdge { u, v } => BTreeSet::from([*u, *v]),
            ExceedsCertificate::Cycle { cycle } => cycle.iter().copied().collect(),
            ExceedsCertificate::Degeneracy { core, .. } => core.clone(),
            ExceedsCertificate::ExhaustiveSearch { component, .. } => component.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TwVerdict {
    AtMost { decomposition: TreeDecomposition },
    Exceeds { certificate: ExceedsCertificate },
    /// Above the vertex cap and the bounds do not decide.
    Unknown { lower: Width, upper: Width },
}

impl TwVerdict {
    pub fn is_at_most(&self) -> bool {
        matches!(self, TwVerdict::AtMost { .. })
    }

    pub fn is_exceeds(&self) -> bool {
        matches!(self, TwVerdict::Exceeds { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, TwVerdict::Unknown { .. })
    }

    pub fn decomposition(&self) -> Option<&TreeDecomposition> {
        match self {
            TwVerdict::AtMost { decomposition } => Some(decomposition),
            _ => None,
        }
    }

    pub fn certificate(&self) -> Option<&ExceedsCertificate> {
        match self {
            TwVerdict::Exceeds { certificate } => Some(certificate),
            _ => None,
        }
    }
}

/// Positive-instance search over connected vertex sets. A set C with
/// outside neighborhood N(C) is feasible when |N(C)| ≤ k and some v ∈ C
/// (eliminated last within C) leaves only feasible components; this is
/// exactly a search over elimination orderings of width ≤ k, memoized on
/// the remaining component.
struct ExactSearch {
    adj: Vec<u128>,
    k: usize,
    memo: FxHashMap<u128, Option<u8>>,
    states: usize,
}

fn bits(mut set: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if set == 0 {
            return None;
        }
        let i = set.trailing_zeros() as usize;
        set &= set - 1;
        Some(i)
    })
}

impl ExactSearch {
    fn new(adj: Vec<u128>, k: usize) -> Self {
        ExactSearch { adj, k, memo: FxHashMap::default(), states: 0 }
    }

    fn closed(&self, set: u128) -> u128 {
        bits(set).fold(set, |acc, v| acc | self.adj[v])
    }

    fn boundary(&self, set: u128) -> u128 {
        self.closed(set) & !set
    }

    fn components(&self, set: u128) -> Vec<u128> {
        let mut rest = set;
        let mut out = Vec::new();
        while rest != 0 {
            let mut comp = rest & rest.wrapping_neg();
            let mut frontier = comp;
            while frontier != 0 {
                let grown = bits(frontier).fold(0u128, |acc, v| acc | self.adj[v]) & set & !comp;
                comp |= grown;
                frontier = grown;
            }
            rest &= !comp;
            out.push(comp);
        }
        out
    }

    /// Minimum-degree elimination lower bound on G[C ∪ N(C)] with N(C)
    /// made a clique.
    fn degenerate_above_k(&self, c: u128, nb: u128) -> bool {
        let all = c | nb;
        let mut live = all;
        while live != 0 {
            let mut min = usize::MAX;
            let mut arg = 0;
            for v in bits(live) {
                let mut a = self.adj[v];
                if nb >> v & 1 == 1 {
                    a |= nb;
                }
                let d = (a & live & !(1u128 << v)).count_ones() as usize;
                if d < min {
                    min = d;
                    arg = v;
                }
            }
            if min > self.k {
                return true;
            }
            live &= !(1u128 << arg);
        }
        false
    }

    fn feasible(&mut self, c: u128) -> bool {
        if let Some(r) = self.memo.get(&c) {
            return r.is_some();
        }
        let nb = self.boundary(c);
        let nbc = nb.count_ones() as usize;
        let result = if nbc > self.k {
            None
        } else if c.count_ones() as usize + nbc <= self.k + 1 {
            Some(c.trailing_zeros() as u8)
        } else if self.degenerate_above_k(c, nb) {
            None
        } else {
            self.states += 1;
            let mut candidates: Vec<usize> = bits(c).collect();
            // vertices touching the boundary first: they tend to split C
            candidates.sort_by_key(|&v| std::cmp::Reverse((self.adj[v] & nb).count_ones()));
            let mut found = None;
            'outer: for v in candidates {
                let comps = self.components(c & !(1u128 << v));
                let limit = self.k;
                if comps.iter().any(|&cc| self.boundary(cc).count_ones() as usize > limit) {
                    continue;
                }
                for cc in comps {
                    if !self.feasible(cc) {
                        continue 'outer;
                    }
                }
                found = Some(v as u8);
                break;
            }
            found
        };
        self.memo.insert(c, result);
        result.is_some()
    }

    /// Appends bags for the feasible set `c` below `parent`.
    fn build(&self, c: u128, parent: Option<usize>, bags: &mut Vec<u128>, edges: &mut Vec<(usize, usize)>) {
        let nb = self.boundary(c);
        let me = bags.len();
        if let Some(p) = parent {
            edges.push((p, me));
        }
        if c.count_ones() as usize + nb.count_ones() as usize <= self.k + 1 {
            bags.push(c | nb);
            return;
        }
        let v = self.memo[&c].expect("feasible set") as usize;
        bags.push(nb | 1u128 << v);
        for cc in self.components(c & !(1u128 << v)) {
            self.build(cc, Some(me), bags, edges);
        }
    }
}

fn bitset_adjacency(g: &Graph) -> (Vec<Vertex>, Vec<u128>) {
    let (labels, adj) = g.indexed();
    let masks = adj.iter().map(|a| a.iter().fold(0u128, |m, &u| m | 1u128 << u)).collect();
    (labels, masks)
}

enum Decision {
    Feasible(TreeDecomposition),
    Infeasible { component: BTreeSet<Vertex>, states: usize },
}

/// Exact decision tw(G) ≤ k for |V(G)| ≤ 128.
fn decide_exact(g: &Graph, k: usize) -> Decision {
    let (labels, adj) = bitset_adjacency(g);
    let n = labels.len();
    let mut search = ExactSearch::new(adj, k);
    let all = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let comps = search.components(all);
    for &c in &comps {
        if !search.feasible(c) {
            let component = bits(c).map(|i| labels[i]).collect();
            return Decision::Infeasible { component, states: search.states };
        }
    }
    let mut bags = Vec::new();
    let mut edges = Vec::new();
    for (i, &c) in comps.iter().enumerate() {
        let root = bags.len();
        search.build(c, None, &mut bags, &mut edges);
        if i > 0 {
            edges.push((0, root));
        }
    }
    if bags.is_empty() {
        bags.push(0);
    }
    let bags = bags.into_iter().map(|b| bits(b).map(|i| labels[i]).collect()).collect();
    Decision::Feasible(TreeDecomposition::new(bags, edges))
}

fn check_cap(g: &Graph, cap: usize) -> Result<(), TreewidthError> {
    let cap = cap.min(MAX_VERTEX_CAP);
    if g.vertex_count() > cap {
        return Err(TreewidthError::VertexCapExceeded { vertices: g.vertex_count(), cap });
    }
    Ok(())
}

/// Optimal width and a decomposition attaining it.
pub fn exact_treewidth(g: &Graph, vertex_cap: usize) -> Result<(Width, TreeDecomposition), TreewidthError> {
    check_cap(g, vertex_cap)?;
    let (upper, heuristic) = upper_bound_heuristic(g);
    let lower = lower_bound(g);
    if lower == upper || upper <= 0 {
        return Ok((upper, heuristic));
    }
    for k in lower.max(1)..upper {
        if let Decision::Feasible(td) = decide_exact(g, k as usize) {
            debug_assert!(td.width() <= k);
            return Ok((td.width(), td));
        }
    }
    Ok((upper, heuristic))
}

/// Width-1 decomposition of a forest: bag {v, parent(v)} per non-root.
fn forest_decomposition(g: &Graph) -> TreeDecomposition {
    if g.is_empty() {
        return TreeDecomposition::single_bag([]);
    }
    let mut index: BTreeMap<Vertex, usize> = BTreeMap::new();
    let mut bags = Vec::new();
    let mut edges = Vec::new();
    for root in g.vertices() {
        if index.contains_key(&root) {
            continue;
        }
        let r = bags.len();
        if r > 0 {
            edges.push((0, r));
        }
        index.insert(root, r);
        bags.push(BTreeSet::from([root]));
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for u in g.neighbors(v) {
                if let std::collections::btree_map::Entry::Vacant(slot) = index.entry(u) {
                    let i = bags.len();
                    slot.insert(i);
                    bags.push(BTreeSet::from([u, v]));
                    edges.push((index[&v], i));
                    queue.push_back(u);
                }
            }
        }
    }
    TreeDecomposition::new(bags, edges)
}

/// Decides tw(G) ≤ t with the default vertex cap.
pub fn treewidth_at_most(g: &Graph, t: usize) -> TwVerdict {
    treewidth_at_most_with_cap(g, t, DEFAULT_VERTEX_CAP)
}

/// Decides tw(G) ≤ t. Always decisive for t ≤ 1 and for graphs within
/// `vertex_cap`; otherwise falls back to the bounds and may say Unknown.
pub fn treewidth_at_most_with_cap(g: &Graph, t: usize, vertex_cap: usize) -> TwVerdict {
    if t == 0 {
        if let Some((u, v)) = g.edges().next() {
            return TwVerdict::Exceeds { certificate: ExceedsCertificate::HasEdge { u, v } };
        }
        return TwVerdict::AtMost { decomposition: forest_decomposition(g) };
    }
    if t == 1 {
        return match g.find_cycle() {
            Some(cycle) => TwVerdict::Exceeds { certificate: ExceedsCertificate::Cycle { cycle } },
            None => TwVerdict::AtMost { decomposition: forest_decomposition(g) },
        };
    }
    let (upper, heuristic) = upper_bound_heuristic(g);
    if upper <= t as Width {
        return TwVerdict::AtMost { decomposition: heuristic };
    }
    let (lower, core) = degeneracy_core(g);
    if lower > t as Width {
        return TwVerdict::Exceeds {
            certificate: ExceedsCertificate::Degeneracy { core, min_degree: lower as usize },
        };
    }
    if check_cap(g, vertex_cap).is_err() {
        return TwVerdict::Unknown { lower, upper };
    }
    match decide_exact(g, t) {
        Decision::Feasible(decomposition) => TwVerdict::AtMost { decomposition },
        Decision::Infeasible { component, states } => {
            TwVerdict::Exceeds { certificate: ExceedsCertificate::ExhaustiveSearch { component, states } }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(i: u32) -> Vertex {
        Vertex::Plain(i)
    }

    fn complete(n: u32) -> Graph {
        let mut g = Graph::new();
        for a in 1..=n {
            for b in a + 1..=n {
                g.add_edge(p(a), p(b)).unwrap();
            }
        }
        g
    }

    fn biclique(a: u32, b: u32) -> Graph {
        let mut g = Graph::new();
        for i in 1..=a {
            for j in 1..=b {
                g.add_edge(p(i), p(100 + j)).unwrap();
            }
        }
        g
    }

    fn cycle(n: u32) -> Graph {
        Graph::from_edges((0..n).map(|i| (p(i + 1), p((i + 1) % n + 1))))
    }

    fn grid(n: u32) -> Graph {
        let mut g = Graph::new();
        for i in 0..n {
            for j in 0..n {
                let v = p(i * n + j + 1);
                g.add_vertex(v);
                if j + 1 < n {
                    g.add_edge(v, p(i * n + j + 2)).unwrap();
                }
                if i + 1 < n {
                    g.add_edge(v, p((i + 1) * n + j + 1)).unwrap();
                }
            }
        }
        g
    }

    /// tw by dynamic programming over all vertex subsets:
    /// TW(S) = min over v ∈ S of max(TW(S − v), |Q(S − v, v)|).
    fn oracle_tw(g: &Graph) -> Width {
        let (_, adj) = g.indexed();
        let n = adj.len();
        assert!(n <= 14);
        if n == 0 {
            return -1;
        }
        let q = |s: usize, v: usize| -> usize {
            let mut seen = 1usize << v;
            let mut stack = vec![v];
            let mut out = 0usize;
            while let Some(x) = stack.pop() {
                for &u in &adj[x] {
                    if seen >> u & 1 == 0 {
                        seen |= 1 << u;
                        if s >> u & 1 == 1 {
                            stack.push(u);
                        } else {
                            out += 1;
                        }
                    }
                }
            }
            out
        };
        let mut tw = vec![isize::MAX; 1 << n];
        tw[0] = -1;
        for s in 1usize..1 << n {
            for v in 0..n {
                if s >> v & 1 == 1 {
                    let rest = s & !(1 << v);
                    let val = tw[rest].max(q(rest, v) as isize);
                    tw[s] = tw[s].min(val);
                }
            }
        }
        tw[(1 << n) - 1]
    }

    #[test]
    fn single_bag_is_valid() {
        let k5 = complete(5);
        let td = TreeDecomposition::single_bag(k5.vertices());
        assert_eq!(validate_decomposition(&k5, &td), Ok(()));
        assert_eq!(td.width(), 4);
    }

    #[test]
    fn path_decomposition() {
        let g = Graph::from_edges([(p(1), p(2)), (p(2), p(3))]);
        let td = TreeDecomposition::new(vec![BTreeSet::from([p(1), p(2)]), BTreeSet::from([p(2), p(3)])], vec![(0, 1)]);
        assert_eq!(validate_decomposition(&g, &td), Ok(()));
        assert_eq!(td.width(), 1);
    }

    #[test]
    fn connectivity_violation_names_vertex() {
        let g = Graph::from_edges([(p(1), p(2)), (p(2), p(3))]);
        // bag 1 = {a,b}, bag 2 = {c} sits between bag 1 and bag 3 = {b},
        // so b's bags {1,3} are separated; edge bc is also lost, so cover
        // it by putting c in bag 3.
        let td = TreeDecomposition::new(
            vec![BTreeSet::from([p(1), p(2)]), BTreeSet::from([p(3)]), BTreeSet::from([p(2), p(3)])],
            vec![(0, 1), (1, 2)],
        );
        assert_eq!(validate_decomposition(&g, &td), Err(Violation::Disconnected(p(2))));
    }

    #[test]
    fn other_violations() {
        let g = Graph::from_edges([(p(1), p(2)), (p(2), p(3))]);
        let uncovered = TreeDecomposition::new(vec![BTreeSet::from([p(1), p(2)]), BTreeSet::from([p(3)])], vec![(0, 1)]);
        assert_eq!(validate_decomposition(&g, &uncovered), Err(Violation::EdgeUncovered(p(2), p(3))));
        let missing = TreeDecomposition::single_bag([p(1), p(2)]);
        assert!(matches!(validate_decomposition(&g, &missing), Err(Violation::VertexMissing(_)) | Err(Violation::EdgeUncovered(..))));
        let not_tree = TreeDecomposition::new(vec![BTreeSet::from([p(1), p(2), p(3)]); 2], vec![]);
        assert!(matches!(validate_decomposition(&g, &not_tree), Err(Violation::NotATree(_))));
        let foreign = TreeDecomposition::single_bag([p(1), p(2), p(3), p(9)]);
        assert_eq!(validate_decomposition(&g, &foreign), Err(Violation::UnknownVertex(p(9))));
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(lower_bound(&complete(5)), 4);
        assert_eq!(lower_bound(&Graph::from_edges([(p(1), p(2)), (p(2), p(3)), (p(2), p(4))])), 1);
        assert_eq!(lower_bound(&biclique(4, 4)), 4);
        assert_eq!(lower_bound(&Graph::new()), -1);
    }

    #[test]
    fn heuristic_examples() {
        let (w, td) = upper_bound_heuristic(&Graph::new());
        assert_eq!(w, -1);
        assert_eq!(td.len(), 1);
        assert_eq!(upper_bound_heuristic(&cycle(5)).0, 2);
        assert_eq!(upper_bound_heuristic(&complete(5)).0, 4);
    }

    #[test]
    fn exact_examples() {
        let (w, td) = exact_treewidth(&biclique(4, 4), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(w, 4);
        assert_eq!(validate_decomposition(&biclique(4, 4), &td), Ok(()));
        assert_eq!(exact_treewidth(&cycle(5), 48).unwrap().0, 2);
        assert_eq!(exact_treewidth(&grid(4), 48).unwrap().0, 4);
        assert_eq!(exact_treewidth(&grid(5), 48).unwrap().0, 5);
    }

    #[test]
    fn isolated_vertices_have_width_zero() {
        let mut g = Graph::new();
        g.add_vertex(p(1));
        g.add_vertex(p(2));
        let (w, td) = exact_treewidth(&g, 48).unwrap();
        assert_eq!(w, 0);
        assert_eq!(validate_decomposition(&g, &td), Ok(()));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(exact_treewidth(&grid(7), 48), Err(TreewidthError::VertexCapExceeded { vertices: 49, cap: 48 })));
        assert!(matches!(exact_treewidth(&grid(12), 500), Err(TreewidthError::VertexCapExceeded { cap: 128, .. })));
    }

    #[test]
    fn decision_examples() {
        let forest = Graph::from_edges([(p(1), p(2)), (p(3), p(4)), (p(3), p(5))]);
        assert!(treewidth_at_most(&forest, 1).is_at_most());
        assert!(treewidth_at_most(&complete(5), 3).is_exceeds());
        assert!(treewidth_at_most(&complete(5), 4).is_at_most());
        assert!(treewidth_at_most(&forest, 0).is_exceeds());
        assert!(treewidth_at_most(&cycle(6), 1).is_exceeds());
        assert!(treewidth_at_most(&grid(4), 3).is_exceeds());
    }

    #[test]
    fn eight_wall_has_treewidth_four() {
        let (w, _) = crate::graph::make_wall(8).unwrap();
        let (tw, td) = exact_treewidth(&w, 64).unwrap();
        assert_eq!(tw, 4);
        assert_eq!(validate_decomposition(&w, &td), Ok(()));
    }

    #[test]
    fn unknown_above_cap() {
        // 64-vertex grid with tw 8: heuristic width > 4, degeneracy 2
        let v = treewidth_at_most_with_cap(&grid(8), 4, 48);
        assert!(v.is_unknown(), "{v:?}");
    }

    #[test]
    fn exceeds_certificate_subgraph_exceeds() {
        let g = grid(4);
        let v = treewidth_at_most(&g, 2);
        let cert = v.certificate().unwrap();
        let sub = g.induced(&cert.vertices());
        assert!(exact_treewidth(&sub, 48).unwrap().0 > 2);
    }

    fn arb_graph(max_n: u32) -> impl Strategy<Value = Graph> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec((1..=n, 1..=n), 0..(3 * n as usize)).prop_map(move |pairs| {
                let mut g = Graph::new();
                for i in 1..=n {
                    g.add_vertex(p(i));
                }
                for (a, b) in pairs {
                    if a != b {
                        g.add_edge(p(a), p(b)).unwrap();
                    }
                }
                g
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn exact_matches_subset_oracle(g in arb_graph(11)) {
            let (w, td) = exact_treewidth(&g, 48).unwrap();
            prop_assert_eq!(w, oracle_tw(&g));
            prop_assert_eq!(validate_decomposition(&g, &td), Ok(()));
            prop_assert_eq!(td.width(), w);
        }

        #[test]
        fn bounds_sandwich(g in arb_graph(20)) {
            let (w, td) = exact_treewidth(&g, 48).unwrap();
            let (u, htd) = upper_bound_heuristic(&g);
            prop_assert!(lower_bound(&g) <= w);
            prop_assert!(w <= u);
            prop_assert_eq!(validate_decomposition(&g, &htd), Ok(()));
            prop_assert_eq!(validate_decomposition(&g, &td), Ok(()));
        }

        #[test]
        fn decision_agrees_with_exact(g in arb_graph(16), t in 0usize..5) {
            let (w, _) = exact_treewidth(&g, 48).unwrap();
            let verdict = treewidth_at_most(&g, t);
            prop_assert_eq!(verdict.is_at_most(), w <= t as Width);
            if let Some(td) = verdict.decomposition() {
                prop_assert_eq!(validate_decomposition(&g, td), Ok(()));
                prop_assert!(td.width() <= t as Width);
            }
            if let Some(cert) = verdict.certificate() {
                let sub = g.induced(&cert.vertices());
                prop_assert!(exact_treewidth(&sub, 48).unwrap().0 > t as Width);
            }
        }

        #[test]
        fn subgraph_monotone(g in arb_graph(14), drop in proptest::collection::btree_set(1u32..15, 0..5)) {
            let keep: BTreeSet<Vertex> = g.vertices().filter(|v| !matches!(v, Vertex::Plain(i) if drop.contains(i))).collect();
            let sub = g.induced(&keep);
            prop_assert!(exact_treewidth(&sub, 48).unwrap().0 <= exact_treewidth(&g, 48).unwrap().0);
        }
    }
}
