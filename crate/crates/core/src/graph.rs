//! Simple undirected graphs with tagged vertices, the signed incidence
//! graph of a CNF formula, dissolution, and walls.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::formula::{ClauseId, CnfFormula, Polarity, Var};

pub mod iso;
pub mod wall;

pub use iso::{find_isomorphism, is_isomorphic};
pub use wall::{is_wall_subdivision, make_wall, subdivide_edges, wall_adjacent, wall_edges, wall_vertex, Coord, WallCoordinates, WallModel};

/// A vertex. Variable and clause vertices carry the formula's ids, so they
/// stay stable across reductions; plain vertices are used for graphs that
/// do not come from a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Var(Var),
    Clause(ClauseId),
    Plain(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Variable,
    Clause,
    Plain,
}

impl Vertex {
    pub fn kind(self) -> VertexKind {
        match self {
            Vertex::Var(_) => VertexKind::Variable,
            Vertex::Clause(_) => VertexKind::Clause,
            Vertex::Plain(_) => VertexKind::Plain,
        }
    }

    pub fn as_var(self) -> Option<Var> {
        match self {
            Vertex::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_clause(self) -> Option<ClauseId> {
        match self {
            Vertex::Clause(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Var(v) => write!(f, "v{v}"),
            Vertex::Clause(c) => write!(f, "c{c}"),
            Vertex::Plain(p) => write!(f, "p{p}"),
        }
    }
}

impl FromStr for Vertex {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadVertexLabel(s.to_string());
        let (tag, id) = s.split_at_checked(1).ok_or_else(bad)?;
        let id: u32 = id.parse().map_err(|_| bad())?;
        match tag {
            "v" => Ok(Vertex::Var(id)),
            "c" => Ok(Vertex::Clause(id)),
            "p" => Ok(Vertex::Plain(id)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at {0}")]
    SelfLoop(Vertex),
    #[error("signed edge {0}-{1} must join a variable and a clause")]
    SignedEdgeNotBipartite(Vertex, Vertex),
    #[error("wall size must be at least 2, got {0}")]
    WallTooSmall(usize),
    #[error("bad vertex label {0:?}")]
    BadVertexLabel(String),
    #[error("invalid wall model: {0}")]
    InvalidWallModel(String),
}

/// A simple undirected graph. Edge signs are optional and only allowed on
/// variable–clause edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    adj: BTreeMap<Vertex, BTreeSet<Vertex>>,
    signs: BTreeMap<(Vertex, Vertex), Polarity>,
}

fn ordered(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Self {
        let mut g = Graph::new();
        for (u, v) in edges {
            g.add_edge(u, v).expect("no self-loops");
        }
        g
    }

    pub fn add_vertex(&mut self, v: Vertex) {
        self.adj.entry(v).or_default();
    }

    /// Adds the edge uv (idempotent). Endpoints are added as needed.
    pub fn add_edge(&mut self, u: Vertex, v: Vertex) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        self.adj.entry(u).or_default().insert(v);
        self.adj.entry(v).or_default().insert(u);
        Ok(())
    }

    pub fn add_signed_edge(&mut self, u: Vertex, v: Vertex, sign: Polarity) -> Result<(), GraphError> {
        let bipartite = matches!(
            (u.kind(), v.kind()),
            (VertexKind::Variable, VertexKind::Clause) | (VertexKind::Clause, VertexKind::Variable)
        );
        if !bipartite {
            return Err(GraphError::SignedEdgeNotBipartite(u, v));
        }
        self.add_edge(u, v)?;
        self.signs.insert(ordered(u, v), sign);
        Ok(())
    }

    pub fn remove_vertex(&mut self, v: Vertex) {
        if let Some(nbrs) = self.adj.remove(&v) {
            for u in nbrs {
                if let Some(set) = self.adj.get_mut(&u) {
                    set.remove(&v);
                }
                self.signs.remove(&ordered(u, v));
            }
        }
    }

    pub fn remove_edge(&mut self, u: Vertex, v: Vertex) -> bool {
        let had = self.adj.get_mut(&u).is_some_and(|s| s.remove(&v));
        if had {
            self.adj.get_mut(&v).map(|s| s.remove(&u));
            self.signs.remove(&ordered(u, v));
        }
        had
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.adj.keys().copied()
    }

    pub fn vertex_set(&self) -> BTreeSet<Vertex> {
        self.adj.keys().copied().collect()
    }

    /// Each edge once, as (smaller, larger).
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adj
            .iter()
            .flat_map(|(&u, nbrs)| nbrs.range(u..).map(move |&v| (u, v)))
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adj.get(&u).is_some_and(|s| s.contains(&v))
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj.get(&v).into_iter().flat_map(|s| s.iter().copied())
    }

    pub fn neighbor_set(&self, v: Vertex) -> &BTreeSet<Vertex> {
        static EMPTY: BTreeSet<Vertex> = BTreeSet::new();
        self.adj.get(&v).unwrap_or(&EMPTY)
    }

    /// N(S) = union of neighborhoods minus S.
    pub fn set_neighborhood(&self, set: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
        set.iter()
            .flat_map(|&v| self.neighbors(v))
            .filter(|u| !set.contains(u))
            .collect()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj.get(&v).map_or(0, BTreeSet::len)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.values().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn sign(&self, u: Vertex, v: Vertex) -> Option<Polarity> {
        self.signs.get(&ordered(u, v)).copied()
    }

    pub fn is_signed(&self) -> bool {
        !self.signs.is_empty()
    }

    /// G[S]: vertices of S present in G and the edges among them.
    pub fn induced(&self, set: &BTreeSet<Vertex>) -> Graph {
        let mut g = Graph::new();
        for &v in set {
            if let Some(nbrs) = self.adj.get(&v) {
                g.adj.insert(v, nbrs.iter().copied().filter(|u| set.contains(u)).collect());
            }
        }
        g.signs = self
            .signs
            .iter()
            .filter(|((u, v), _)| set.contains(u) && set.contains(v))
            .map(|(&e, &s)| (e, s))
            .collect();
        g
    }

    /// G − S.
    pub fn without(&self, set: &BTreeSet<Vertex>) -> Graph {
        let keep: BTreeSet<Vertex> = self.vertices().filter(|v| !set.contains(v)).collect();
        self.induced(&keep)
    }

    /// Whether every vertex and edge of `other` is present here.
    pub fn contains_subgraph(&self, other: &Graph) -> bool {
        other.vertices().all(|v| self.contains(v)) && other.edges().all(|(u, v)| self.has_edge(u, v))
    }

    pub fn components(&self) -> Vec<BTreeSet<Vertex>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.vertices() {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            seen.insert(start);
            while let Some(v) = queue.pop_front() {
                comp.insert(v);
                for u in self.neighbors(v) {
                    if seen.insert(u) {
                        queue.push_back(u);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Some cycle as a closed vertex sequence (first vertex not repeated),
    /// or `None` for a forest.
    pub fn find_cycle(&self) -> Option<Vec<Vertex>> {
        let mut parent: BTreeMap<Vertex, Option<Vertex>> = BTreeMap::new();
        for root in self.vertices() {
            if parent.contains_key(&root) {
                continue;
            }
            parent.insert(root, None);
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for u in self.neighbors(v) {
                    if parent[&v] == Some(u) {
                        continue;
                    }
                    if parent.contains_key(&u) {
                        return Some(cycle_through(&parent, v, u));
                    }
                    parent.insert(u, Some(v));
                    stack.push(u);
                }
            }
        }
        None
    }

    pub fn is_forest(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Dense relabeling: sorted vertex list and adjacency by index.
    pub fn indexed(&self) -> (Vec<Vertex>, Vec<Vec<usize>>) {
        let verts: Vec<Vertex> = self.vertices().collect();
        let index: BTreeMap<Vertex, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let adj = verts
            .iter()
            .map(|v| self.neighbors(*v).map(|u| index[&u]).collect())
            .collect();
        (verts, adj)
    }

    /// The incidence graph inc(F): one vertex per variable (free variables
    /// included, isolated) and per clause; edge xc signed by the polarity
    /// of x in c.
    pub fn incidence(formula: &CnfFormula) -> Graph {
        let mut g = Graph::new();
        for v in formula.all_vars() {
            g.add_vertex(Vertex::Var(v));
        }
        for clause in formula.clauses() {
            let c = Vertex::Clause(clause.id());
            g.add_vertex(c);
            for lit in clause.literals() {
                g.add_signed_edge(Vertex::Var(lit.var()), c, lit.polarity())
                    .expect("variable-clause edge");
            }
        }
        g
    }
}

fn cycle_through(parent: &BTreeMap<Vertex, Option<Vertex>>, v: Vertex, u: Vertex) -> Vec<Vertex> {
    // u is an already-visited non-parent neighbor of v; the cycle is the
    // tree path between them closed by the edge uv.
    let path_to_root = |mut x: Vertex| {
        let mut path = vec![x];
        while let Some(p) = parent[&x] {
            path.push(p);
            x = p;
        }
        path
    };
    let pv = path_to_root(v);
    let pu = path_to_root(u);
    let on_u: BTreeSet<Vertex> = pu.iter().copied().collect();
    let meet = *pv.iter().find(|x| on_u.contains(x)).expect("same tree");
    let mut cycle: Vec<Vertex> = pv.iter().copied().take_while(|&x| x != meet).collect();
    cycle.push(meet);
    let tail: Vec<Vertex> = pu.iter().copied().take_while(|&x| x != meet).collect();
    cycle.extend(tail.into_iter().rev());
    cycle
}

/// Shorthand for `Graph::incidence`.
pub fn build_incidence(formula: &CnfFormula) -> Graph {
    Graph::incidence(formula)
}

/// Repeatedly dissolves unprotected degree-2 vertices (replacing the
/// vertex by an edge between its neighbors, merged if already present)
/// until none remains.
pub fn dissolve_degree_two(graph: &Graph, protected: &BTreeSet<Vertex>) -> Graph {
    dissolve_in_order(graph, protected, |pending| pending.iter().next().copied())
}

/// Dissolution with a caller-chosen pick from the pending set; used to
/// exercise order independence.
pub fn dissolve_in_order(
    graph: &Graph,
    protected: &BTreeSet<Vertex>,
    mut pick: impl FnMut(&BTreeSet<Vertex>) -> Option<Vertex>,
) -> Graph {
    let mut g = graph.clone();
    g.signs.clear();
    let mut pending: BTreeSet<Vertex> = g
        .vertices()
        .filter(|v| !protected.contains(v) && g.degree(*v) == 2)
        .collect();
    while let Some(v) = pick(&pending) {
        pending.remove(&v);
        if !g.contains(v) || g.degree(v) != 2 {
            continue;
        }
        let nbrs: Vec<Vertex> = g.neighbors(v).collect();
        let (a, b) = (nbrs[0], nbrs[1]);
        g.remove_vertex(v);
        g.add_edge(a, b).expect("distinct neighbors");
        for x in [a, b] {
            if !protected.contains(&x) && g.degree(x) == 2 {
                pending.insert(x);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_dimacs, Assignment};

    fn p(i: u32) -> Vertex {
        Vertex::Plain(i)
    }

    #[test]
    fn incidence_of_small_formula() {
        let f = parse_dimacs("p cnf 2 2\n1 2 0\n-1 2 0\n").unwrap();
        let g = build_incidence(&f);
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.sign(Vertex::Var(1), Vertex::Clause(2)), Some(Polarity::Negative));
        assert_eq!(g.sign(Vertex::Clause(1), Vertex::Var(1)), Some(Polarity::Positive));
        assert_eq!(g.vertex_count() + g.edge_count(), f.size());
    }

    #[test]
    fn incidence_of_empty_formula() {
        assert!(build_incidence(&CnfFormula::default()).is_empty());
    }

    #[test]
    fn free_vars_are_isolated() {
        let f = parse_dimacs("p cnf 3 1\n1 2 0\n").unwrap();
        let g = build_incidence(&f);
        assert_eq!(g.degree(Vertex::Var(3)), 0);
        assert_eq!(g.vertex_count(), 4);
    }

    #[test]
    fn reduction_gives_induced_subgraph() {
        let f = parse_dimacs("p cnf 3 3\n1 2 0\n-1 3 0\n2 3 0\n").unwrap();
        let g = build_incidence(&f);
        let reduced = build_incidence(&f.reduce(&Assignment::single(1, true)).unwrap());
        let removed = BTreeSet::from([Vertex::Var(1), Vertex::Clause(1)]);
        assert_eq!(reduced, g.without(&removed));
    }

    #[test]
    fn signed_edges_must_be_bipartite() {
        let mut g = Graph::new();
        assert!(g.add_signed_edge(Vertex::Var(1), Vertex::Var(2), Polarity::Positive).is_err());
        assert!(g.add_edge(p(1), p(1)).is_err());
    }

    #[test]
    fn cycle_detection() {
        let path = Graph::from_edges([(p(1), p(2)), (p(2), p(3))]);
        assert!(path.is_forest());
        let c4 = Graph::from_edges([(p(1), p(2)), (p(2), p(3)), (p(3), p(4)), (p(4), p(1))]);
        let cycle = c4.find_cycle().unwrap();
        assert_eq!(cycle.len(), 4);
        for w in 0..cycle.len() {
            assert!(c4.has_edge(cycle[w], cycle[(w + 1) % cycle.len()]));
        }
    }

    #[test]
    fn dissolving_a_path() {
        let g = Graph::from_edges([(p(1), p(2)), (p(2), p(3))]);
        let d = dissolve_degree_two(&g, &BTreeSet::from([p(1), p(3)]));
        assert_eq!(d, Graph::from_edges([(p(1), p(3))]));
    }

    #[test]
    fn dissolving_triangle_merges_parallel_edge() {
        let g = Graph::from_edges([(p(1), p(2)), (p(2), p(3)), (p(3), p(1))]);
        let d = dissolve_degree_two(&g, &BTreeSet::new());
        assert_eq!(d.vertex_count(), 2);
        assert_eq!(d.edge_count(), 1);
    }

    #[test]
    fn vertex_labels_round_trip() {
        for v in [Vertex::Var(3), Vertex::Clause(12), Vertex::Plain(1)] {
            assert_eq!(v.to_string().parse::<Vertex>().unwrap(), v);
        }
        assert!("x1".parse::<Vertex>().is_err());
        assert!("".parse::<Vertex>().is_err());
    }
}
