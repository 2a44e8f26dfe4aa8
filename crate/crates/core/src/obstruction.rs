//! Wall obstructions and the template machinery behind the approximation:
//! FPT constants, tiling a wall model into disjoint obstructions,
//! obstruction templates, merged template graphs and the three selection
//! rules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::backdoor::{killer_set, BackdoorError, CandidateProvider, KillerUnionProvider};
use crate::formula::{CnfFormula, Var};
use crate::graph::{wall_edges, Coord, Graph, Vertex, WallModel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObstructionError {
    #[error("wall model has r = {r}, tiling needs at least {needed}")]
    ModelTooSmall { r: usize, needed: usize },
    #[error("the killer set Z is empty")]
    EmptyZ,
    #[error("variable {0} is not adjacent to the obstruction")]
    NotAdjacent(Var),
    #[error("templates do not share the same Z")]
    MismatchedZ,
    #[error("invalid guess: {0}")]
    InvalidGuess(String),
}

fn serialize_opt_decimal<S: Serializer>(n: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
    match n {
        Some(n) => s.collect_str(n),
        None => s.serialize_none(),
    }
}

/// nb(t) = ⌈16 (t+2) log2(t+2)⌉.
pub fn nb(t: usize) -> usize {
    let x = 16.0 * (t + 2) as f64 * ((t + 2) as f64).log2();
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

/// Exponents up to this size get the exact value of 20^e.
const EXACT_TW_EXPONENT: u32 = 4096;

/// tw(k,t) = 20^e with e = 64·wall⁵.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwBound {
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub exponent: BigUint,
    pub log10: f64,
    #[serde(serialize_with = "serialize_opt_decimal")]
    pub exact: Option<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FptConstants {
    pub k: usize,
    pub t: usize,
    pub nb: usize,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub same: BigUint,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub obs: BigUint,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub wall: BigUint,
    pub tw_bound: TwBound,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub s_k: BigUint,
}

/// Evaluates the constants with base-2 logarithms; wall is rounded up.
pub fn fpt_constants(k: usize, t: usize) -> FptConstants {
    let nbv = nb(t);
    let pow2 = |e: usize| BigUint::one() << e;
    let same = BigUint::from(3u32) * BigUint::from(nbv) * BigUint::from(nbv) * BigUint::from(t) * pow2(2 * k);
    let obs = pow2(k) * &same + BigUint::from(k);
    let side = BigUint::from(2 * t + 2);
    // (2t+2)(1 + √obs) rounded up = (2t+2) + ⌈√((2t+2)²·obs)⌉
    let radicand = &side * &side * &obs;
    let mut root = radicand.sqrt();
    if &root * &root < radicand {
        root += 1u32;
    }
    let wall = &side + root;
    let exponent = BigUint::from(64u32) * wall.pow(5);
    let log10 = exponent.to_f64().unwrap_or(f64::INFINITY) * 20f64.log10();
    let exact = exponent.to_u32().filter(|&e| e <= EXACT_TW_EXPONENT).map(|e| BigUint::from(20u32).pow(e));
    FptConstants {
        k,
        t,
        nb: nbv,
        same,
        obs,
        wall,
        tw_bound: TwBound { exponent, log10, exact },
        s_k: pow2(k) - 1u32,
    }
}

fn serialize_branch<S: Serializer>(branch: &BTreeMap<Coord, Vertex>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(branch.iter().map(|(&(i, j), v)| ((i, j), v)))
}

/// A subgraph of the host that subdivides an r-wall (r = 2t+2 when it
/// comes from tiling), with its branch vertices by local coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WallObstruction {
    pub vertices: BTreeSet<Vertex>,
    pub edges: BTreeSet<(Vertex, Vertex)>,
    pub r: usize,
    #[serde(serialize_with = "serialize_branch")]
    pub branch: BTreeMap<Coord, Vertex>,
}

impl WallObstruction {
    pub fn subgraph(&self) -> Graph {
        let mut g = Graph::new();
        for &v in &self.vertices {
            g.add_vertex(v);
        }
        for &(u, v) in &self.edges {
            g.add_edge(u, v).expect("obstruction edges join distinct vertices");
        }
        g
    }

    /// Whether every vertex and edge is still present in `g`.
    pub fn survives_in(&self, g: &Graph) -> bool {
        self.vertices.iter().all(|&v| g.contains(v)) && self.edges.iter().all(|&(u, v)| g.has_edge(u, v))
    }
}

/// Cuts the wall into ⌊r/(2t+2)⌋² blocks of (2t+2)×(2t+2) coordinates and
/// maps each block through the model.
pub fn tile_obstructions(model: &WallModel, t: usize) -> Result<Vec<WallObstruction>, ObstructionError> {
    let side = 2 * t + 2;
    if model.r < side {
        return Err(ObstructionError::ModelTooSmall { r: model.r, needed: side });
    }
    let blocks = model.r / side;
    let local_edges = wall_edges(side);
    let mut out = Vec::with_capacity(blocks * blocks);
    for bi in 0..blocks {
        for bj in 0..blocks {
            let global = |(i, j): Coord| (bi * side + i, bj * side + j);
            let mut vertices = BTreeSet::new();
            let mut edges = BTreeSet::new();
            for &(a, b) in &local_edges {
                let path = &model.paths[&(global(a), global(b))];
                vertices.extend(path.iter().copied());
                for w in path.windows(2) {
                    edges.insert((w[0].min(w[1]), w[0].max(w[1])));
                }
            }
            let branch = (1..=side)
                .cartesian_product(1..=side)
                .map(|c| (c, model.branch[&global(c)]))
                .collect();
            out.push(WallObstruction { vertices, edges, r: side, branch });
        }
    }
    Ok(out)
}

/// Variables that externally kill every obstruction of `shared`.
pub fn common_external_killers(f: &CnfFormula, shared: &[WallObstruction]) -> BTreeSet<Var> {
    let mut sets = shared.iter().map(|w| killer_set(f, &w.vertices).external);
    let Some(first) = sets.next() else {
        return BTreeSet::new();
    };
    sets.fold(first, |acc, s| acc.intersection(&s).copied().collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QVertex {
    /// Index into the template's regions.
    pub region: usize,
    pub neighbors: BTreeSet<Var>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObstructionTemplate {
    pub obstruction: WallObstruction,
    pub t: usize,
    pub nb: usize,
    pub z: BTreeSet<Var>,
    pub q: Vec<QVertex>,
    pub regions: Vec<BTreeSet<Vertex>>,
}

/// The shrinking rooted spanning tree of the template construction.
struct PeelTree {
    adj: BTreeMap<Vertex, BTreeSet<Vertex>>,
    zadj: BTreeMap<Vertex, BTreeSet<Var>>,
    root: Vertex,
}

impl PeelTree {
    fn weight_of<'a>(&self, set: impl IntoIterator<Item = &'a Vertex>) -> BTreeSet<Var> {
        set.into_iter().flat_map(|v| self.zadj[v].iter().copied()).collect()
    }

    /// The side of edge (from, avoid) that contains `from`.
    fn side(&self, from: Vertex, avoid: Vertex) -> BTreeSet<Vertex> {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            for &w in &self.adj[&u] {
                if !(u == from && w == avoid) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Walks the root towards heavy sides until cutting off any child
    /// subtree leaves weight at least nb.
    fn reroot(&mut self, nb: usize) {
        'walk: loop {
            let r = self.root;
            for &c in &self.adj[&r] {
                if self.weight_of(&self.side(r, c)).len() < nb {
                    self.root = c;
                    continue 'walk;
                }
            }
            return;
        }
    }

    /// Parents and depths from the root, in BFS order.
    fn rooted(&self) -> (Vec<Vertex>, BTreeMap<Vertex, Vertex>, BTreeMap<Vertex, usize>) {
        let mut order = vec![self.root];
        let mut parent = BTreeMap::new();
        let mut depth = BTreeMap::from([(self.root, 0)]);
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            i += 1;
            for &w in &self.adj[&u] {
                if !depth.contains_key(&w) {
                    depth.insert(w, depth[&u] + 1);
                    parent.insert(w, u);
                    order.push(w);
                }
            }
        }
        (order, parent, depth)
    }

    fn remove(&mut self, set: &BTreeSet<Vertex>) {
        for v in set {
            self.adj.remove(v);
        }
        for nbrs in self.adj.values_mut() {
            nbrs.retain(|w| !set.contains(w));
        }
    }
}

/// Runs the peeling construction: re-root while the tree is heavy, cut
/// the deepest subtree of weight ≥ nb(t) into a region and attach
/// ⌈|B_v|/s⌉ Q-vertices to it, until the tree is consumed.
pub fn build_template(
    f: &CnfFormula,
    w: &WallObstruction,
    z: &BTreeSet<Var>,
    t: usize,
) -> Result<ObstructionTemplate, ObstructionError> {
    if z.is_empty() {
        return Err(ObstructionError::EmptyZ);
    }
    let g = Graph::incidence(f);
    let zadj: BTreeMap<Vertex, BTreeSet<Var>> = w
        .vertices
        .iter()
        .map(|&v| {
            let hits = if g.contains(v) {
                g.neighbors(v).filter_map(Vertex::as_var).filter(|x| z.contains(x)).collect()
            } else {
                BTreeSet::new()
            };
            (v, hits)
        })
        .collect();
    let touched: BTreeSet<Var> = zadj.values().flatten().copied().collect();
    if let Some(&x) = z.iter().find(|x| !touched.contains(x)) {
        return Err(ObstructionError::NotAdjacent(x));
    }
    let nbv = nb(t);
    let mut tree = PeelTree { adj: spanning_tree(w), zadj, root: *w.vertices.first().expect("z is adjacent to W") };
    let mut regions = Vec::new();
    let mut q = Vec::new();
    loop {
        let total = tree.weight_of(tree.adj.keys()).len();
        if total > 3 * nbv {
            tree.reroot(nbv);
        }
        let (order, parent, depth) = tree.rooted();
        let mut subtree: BTreeMap<Vertex, BTreeSet<Vertex>> = BTreeMap::new();
        for &u in order.iter().rev() {
            let mut set = subtree.remove(&u).unwrap_or_default();
            set.insert(u);
            if let Some(&p) = parent.get(&u) {
                subtree.entry(p).or_default().extend(set.iter().copied());
            }
            subtree.insert(u, set);
        }
        let v = if total <= 3 * nbv {
            tree.root
        } else {
            order
                .iter()
                .copied()
                .filter(|u| tree.weight_of(&subtree[u]).len() >= nbv)
                .max_by_key(|u| (depth[u], std::cmp::Reverse(*u)))
                .unwrap_or(tree.root)
        };
        let region = subtree.remove(&v).expect("every tree node has a subtree");
        let rest: BTreeSet<Vertex> = region.iter().copied().filter(|&u| u != v).collect();
        let shared = tree.weight_of(&rest);
        let b: Vec<Var> = tree.weight_of(&region).difference(&shared).copied().collect();
        let s = (3 * nbv).saturating_sub(shared.len()).max(1);
        let index = regions.len();
        if b.is_empty() {
            q.push(QVertex { region: index, neighbors: shared });
        } else {
            for i in 0..b.len().div_ceil(s) {
                let mut neighbors = shared.clone();
                neighbors.extend((i * s..(i + 1) * s).map(|j| b[j % b.len()]));
                q.push(QVertex { region: index, neighbors });
            }
        }
        let done = v == tree.root;
        tree.remove(&region);
        regions.push(region);
        if done {
            break;
        }
    }
    Ok(ObstructionTemplate { obstruction: w.clone(), t, nb: nbv, z: z.clone(), q, regions })
}

/// Breadth-first spanning tree of W from its smallest vertex.
fn spanning_tree(w: &WallObstruction) -> BTreeMap<Vertex, BTreeSet<Vertex>> {
    let mut wadj: BTreeMap<Vertex, BTreeSet<Vertex>> = w.vertices.iter().map(|&v| (v, BTreeSet::new())).collect();
    for &(a, b) in &w.edges {
        wadj.entry(a).or_default().insert(b);
        wadj.entry(b).or_default().insert(a);
    }
    let mut tree: BTreeMap<Vertex, BTreeSet<Vertex>> = w.vertices.iter().map(|&v| (v, BTreeSet::new())).collect();
    let mut seen = BTreeSet::new();
    for &start in &w.vertices {
        if !seen.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &x in &wadj[&u] {
                if seen.insert(x) {
                    tree.get_mut(&u).unwrap().insert(x);
                    tree.get_mut(&x).unwrap().insert(u);
                    queue.push_back(x);
                }
            }
        }
    }
    tree
}

/// A violated template property with its witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum TemplateViolation {
    /// The regions do not partition V(W) into connected pieces.
    Partition { detail: String },
    /// (1) q is adjacent to z although no vertex of R(q) is.
    OnlyExistingEdges { q: usize, z: Var },
    /// (2) every neighbor of q is shared with another Q-vertex of its region.
    PrivateNeighbor { q: usize },
    /// (3) z has no Q-neighbor.
    DegreeZ { z: Var },
    /// (4) deg(q) outside [nb, 3nb].
    DegreeQw { q: usize, degree: usize },
    /// (5) more than one vertex of R(q) sees Z outside N(q).
    VulnerableVertex { q: usize, vertices: Vec<Vertex> },
}

impl TemplateViolation {
    /// 0 for the partition check, 1..=5 for the numbered properties.
    pub fn property(&self) -> usize {
        match self {
            TemplateViolation::Partition { .. } => 0,
            TemplateViolation::OnlyExistingEdges { .. } => 1,
            TemplateViolation::PrivateNeighbor { .. } => 2,
            TemplateViolation::DegreeZ { .. } => 3,
            TemplateViolation::DegreeQw { .. } => 4,
            TemplateViolation::VulnerableVertex { .. } => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PropertyReport {
    pub violations: Vec<TemplateViolation>,
}

impl PropertyReport {
    pub fn holds(&self, property: usize) -> bool {
        self.violations.iter().all(|v| v.property() != property)
    }

    pub fn all_hold(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn flags(&self) -> BTreeMap<&'static str, bool> {
        BTreeMap::from([
            ("partition", self.holds(0)),
            ("only_existing_edges", self.holds(1)),
            ("private_neighbor", self.holds(2)),
            ("degree_z", self.holds(3)),
            ("degree_qw", self.holds(4)),
            ("vulnerable_vertex", self.holds(5)),
        ])
    }
}

/// Checks the region partition and the five template properties
/// literally against inc(F).
pub fn validate_template(f: &CnfFormula, ot: &ObstructionTemplate) -> PropertyReport {
    let g = Graph::incidence(f);
    let mut violations = Vec::new();
    let wg = ot.obstruction.subgraph();

    let mut covered = BTreeSet::new();
    for (i, region) in ot.regions.iter().enumerate() {
        if region.is_empty() || !wg.induced(region).is_connected() {
            violations.push(TemplateViolation::Partition { detail: format!("region {i} is empty or disconnected") });
        }
        for &v in region {
            if !covered.insert(v) {
                violations.push(TemplateViolation::Partition { detail: format!("{v} lies in two regions") });
            }
        }
    }
    if covered != ot.obstruction.vertices {
        violations.push(TemplateViolation::Partition { detail: "regions do not cover V(W)".into() });
    }
    if let Some(qi) = ot.q.iter().position(|q| q.region >= ot.regions.len()) {
        violations.push(TemplateViolation::Partition { detail: format!("q{qi} maps to a missing region") });
        return PropertyReport { violations };
    }

    let seen_z = |v: Vertex| -> BTreeSet<Var> {
        if g.contains(v) {
            g.neighbors(v).filter_map(Vertex::as_var).filter(|x| ot.z.contains(x)).collect()
        } else {
            BTreeSet::new()
        }
    };
    for (qi, q) in ot.q.iter().enumerate() {
        let region = &ot.regions[q.region];
        let reach: BTreeSet<Var> = region.iter().flat_map(|&v| seen_z(v)).collect();
        if let Some(&z) = q.neighbors.iter().find(|z| !reach.contains(z)) {
            violations.push(TemplateViolation::OnlyExistingEdges { q: qi, z });
        }
        let others: BTreeSet<Var> = ot
            .q
            .iter()
            .enumerate()
            .filter(|&(oi, o)| oi != qi && o.region == q.region)
            .flat_map(|(_, o)| o.neighbors.iter().copied())
            .collect();
        if q.neighbors.iter().all(|z| others.contains(z)) {
            violations.push(TemplateViolation::PrivateNeighbor { q: qi });
        }
        let degree = q.neighbors.len();
        if degree < ot.nb || degree > 3 * ot.nb {
            violations.push(TemplateViolation::DegreeQw { q: qi, degree });
        }
        let vulnerable: Vec<Vertex> =
            region.iter().copied().filter(|&v| !seen_z(v).is_subset(&q.neighbors)).collect();
        if vulnerable.len() > 1 {
            violations.push(TemplateViolation::VulnerableVertex { q: qi, vertices: vulnerable });
        }
    }
    let used: BTreeSet<Var> = ot.q.iter().flat_map(|q| q.neighbors.iter().copied()).collect();
    for &z in ot.z.difference(&used) {
        violations.push(TemplateViolation::DegreeZ { z });
    }
    PropertyReport { violations }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DumpedQ {
    pub region: usize,
    pub neighbors: Vec<Var>,
}

/// JSON view of a template: regions as vertex labels, Q adjacency and the
/// property flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateDump {
    pub z: Vec<Var>,
    pub regions: Vec<Vec<Vertex>>,
    pub q: Vec<DumpedQ>,
    pub properties: BTreeMap<&'static str, bool>,
}

impl ObstructionTemplate {
    pub fn dump(&self, report: &PropertyReport) -> TemplateDump {
        TemplateDump {
            z: self.z.iter().copied().collect(),
            regions: self.regions.iter().map(|r| r.iter().copied().collect()).collect(),
            q: self.q.iter().map(|q| DumpedQ { region: q.region, neighbors: q.neighbors.iter().copied().collect() }).collect(),
            properties: report.flags(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergedQ {
    pub template: usize,
    pub index: usize,
    pub neighbors: BTreeSet<Var>,
}

/// Bipartite Z–Q graph over several templates sharing Z.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergedTemplates {
    pub z: BTreeSet<Var>,
    pub q: Vec<MergedQ>,
}

impl MergedTemplates {
    /// Union of the templates with disjoint Q sides.
    pub fn union(templates: &[ObstructionTemplate]) -> Result<Self, ObstructionError> {
        let z = templates.first().map(|t| t.z.clone()).unwrap_or_default();
        if templates.iter().any(|t| t.z != z) {
            return Err(ObstructionError::MismatchedZ);
        }
        let q = templates
            .iter()
            .enumerate()
            .flat_map(|(ti, t)| {
                t.q.iter().enumerate().map(move |(qi, q)| MergedQ { template: ti, index: qi, neighbors: q.neighbors.clone() })
            })
            .collect();
        Ok(MergedTemplates { z, q })
    }

    /// Keeps one Q-vertex per neighborhood, the first in (template, index)
    /// order.
    pub fn dedupe(&self) -> Self {
        let mut seen = BTreeSet::new();
        let mut q: Vec<MergedQ> = self.q.clone();
        q.sort_by_key(|m| (m.template, m.index));
        q.retain(|m| seen.insert(m.neighbors.clone()));
        MergedTemplates { z: self.z.clone(), q }
    }

    pub fn degree(&self, z: Var) -> usize {
        self.q.iter().filter(|m| m.neighbors.contains(&z)).count()
    }
}

pub fn merge_and_dedupe(templates: &[ObstructionTemplate]) -> Result<MergedTemplates, ObstructionError> {
    Ok(MergedTemplates::union(templates)?.dedupe())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    FewCommonKillers,
    MultipleNeighborhoods,
    NoMultipleNeighborhoods,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleOutcome {
    pub rule: Rule,
    pub s: BTreeSet<Var>,
    /// Positions in the merged Q list that share S (second rule only).
    pub sharers: Vec<usize>,
}

/// Applies the first matching rule to the merged graph before dedupe:
/// S = Z when |Z| ≤ 6k·nb(t); else the smallest neighborhood shared by
/// ≥ t·2^k + 1 Q-vertices; else the 6k·nb(t) Z-vertices of highest degree
/// after dedupe, smaller ids first on ties.
pub fn apply_rules(merged: &MergedTemplates, k: usize, t: usize) -> RuleOutcome {
    let limit = 6 * k * nb(t);
    if merged.z.len() <= limit {
        return RuleOutcome { rule: Rule::FewCommonKillers, s: merged.z.clone(), sharers: Vec::new() };
    }
    let threshold = t.saturating_mul(1usize.checked_shl(k as u32).unwrap_or(usize::MAX)).saturating_add(1);
    let mut groups: BTreeMap<&BTreeSet<Var>, Vec<usize>> = BTreeMap::new();
    for (i, m) in merged.q.iter().enumerate() {
        groups.entry(&m.neighbors).or_default().push(i);
    }
    if let Some((l, sharers)) = groups.into_iter().find(|(_, s)| s.len() >= threshold) {
        return RuleOutcome { rule: Rule::MultipleNeighborhoods, s: l.clone(), sharers };
    }
    let deduped = merged.dedupe();
    let mut degrees: BTreeMap<Var, usize> = merged.z.iter().map(|&z| (z, 0)).collect();
    for m in &deduped.q {
        for z in &m.neighbors {
            if let Some(d) = degrees.get_mut(z) {
                *d += 1;
            }
        }
    }
    let s = degrees
        .into_iter()
        .sorted_by_key(|&(z, d)| (std::cmp::Reverse(d), z))
        .take(limit)
        .map(|(z, _)| z)
        .collect();
    RuleOutcome { rule: Rule::NoMultipleNeighborhoods, s, sharers: Vec::new() }
}

/// One branch of the full guessing scheme: obstructions assumed to be
/// killed internally, obstructions assumed to share ℓ external killers,
/// and ℓ itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Guess {
    pub internal: Vec<usize>,
    pub shared: Vec<usize>,
    pub ell: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GuessOutcome {
    pub guess: Guess,
    pub z: BTreeSet<Var>,
    pub templates: Vec<ObstructionTemplate>,
    pub rule: RuleOutcome,
}

/// Evaluates a single guess: computes Z over the shared obstructions,
/// builds their templates when Z is large and applies the rules.
pub fn evaluate_guess(
    f: &CnfFormula,
    obstructions: &[WallObstruction],
    guess: &Guess,
    k: usize,
    t: usize,
) -> Result<GuessOutcome, ObstructionError> {
    let bad = |m: &str| Err(ObstructionError::InvalidGuess(m.to_string()));
    if guess.ell == 0 || guess.ell > k {
        return bad("ell must lie in 1..=k");
    }
    if guess.shared.is_empty() {
        return bad("no shared obstructions");
    }
    let all: Vec<usize> = guess.internal.iter().chain(&guess.shared).copied().collect();
    if all.iter().any(|&i| i >= obstructions.len()) || all.iter().collect::<BTreeSet<_>>().len() != all.len() {
        return bad("indices out of range or repeated");
    }
    let shared: Vec<WallObstruction> = guess.shared.iter().map(|&i| obstructions[i].clone()).collect();
    let z = common_external_killers(f, &shared);
    let mut templates = Vec::new();
    if z.len() > 6 * k * nb(t) {
        templates = shared.par_iter().map(|w| build_template(f, w, &z, t)).collect::<Result<_, _>>()?;
    }
    let merged = if templates.is_empty() {
        MergedTemplates { z: z.clone(), q: Vec::new() }
    } else {
        MergedTemplates::union(&templates)?
    };
    let rule = apply_rules(&merged, k, t);
    Ok(GuessOutcome { guess: guess.clone(), z, templates, rule })
}

/// Lazily enumerates every guess: each k-subset of the obstructions as
/// the internally killed ones, each `same`-subset of the rest as shared,
/// and each ℓ in 1..=k. At the real constants this is astronomically
/// long, so callers only ever take a prefix.
pub struct GuessEnumeration {
    inner: Box<dyn Iterator<Item = Guess> + Send>,
}

impl GuessEnumeration {
    pub fn new(obstructions: usize, k: usize, same: usize) -> Self {
        let internal_size = k.min(obstructions);
        let inner = (0..obstructions).combinations(internal_size).flat_map(move |internal| {
            let rest: Vec<usize> = (0..obstructions).filter(|i| !internal.contains(i)).collect();
            rest.into_iter().combinations(same).flat_map(move |shared| {
                let internal = internal.clone();
                (1..=k).map(move |ell| Guess { internal: internal.clone(), shared: shared.clone(), ell })
            })
        });
        GuessEnumeration { inner: Box::new(inner) }
    }
}

impl Iterator for GuessEnumeration {
    type Item = Guess;

    fn next(&mut self) -> Option<Guess> {
        self.inner.next()
    }
}

/// Branches on the killers of the first tiled obstruction that survives
/// in the current formula; falls back to a fresh witness otherwise.
#[derive(Debug, Clone)]
pub struct ObstructionProvider {
    pub model: WallModel,
}

impl CandidateProvider for ObstructionProvider {
    fn candidates(&self, f: &CnfFormula, t: usize, k: usize, cap: usize) -> Result<Vec<Var>, BackdoorError> {
        if let Ok(obstructions) = tile_obstructions(&self.model, t) {
            let g = Graph::incidence(f);
            if let Some(w) = obstructions.iter().find(|w| w.survives_in(&g)) {
                return Ok(killer_set(f, &w.vertices).branching_order());
            }
        }
        KillerUnionProvider.candidates(f, t, k, cap)
    }

    fn name(&self) -> &'static str {
        "wall-obstruction"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backdoor::{approx_backdoor, ApproxConfig, ApproxOutcome};
    use crate::formula::{Assignment, Clause, Literal, Polarity};
    use crate::generators::{gen_shared_template_instance, gen_template_instance, gen_wall_formula};
    use crate::graph::is_wall_subdivision;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Smallest m with 2^m ≥ (t+2)^(16(t+2)), which is nb(t) without floats.
    fn nb_oracle(t: usize) -> usize {
        let target = BigUint::from(t + 2).pow(16 * (t as u32 + 2));
        (0..).find(|&m| BigUint::one() << m >= target).unwrap()
    }

    #[test]
    fn nb_matches_integer_oracle() {
        for t in 0..40 {
            assert_eq!(nb(t), nb_oracle(t), "t = {t}");
        }
        assert_eq!(nb(0), 32);
    }

    #[test]
    fn constants_at_one_one() {
        let c = fpt_constants(1, 1);
        assert_eq!(c.nb, 77);
        assert_eq!(c.same, BigUint::from(71148u32));
        assert_eq!(c.obs, BigUint::from(142297u32));
        assert_eq!(c.wall, BigUint::from(1513u32));
        assert_eq!(c.s_k, BigUint::one());
        assert!(c.tw_bound.exact.is_none());
        let expected = 64.0 * 1513f64.powi(5) * 20f64.log10();
        assert!((c.tw_bound.log10 / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wall_is_smallest_integer_above_real_value() {
        for (k, t) in [(0, 0), (1, 0), (1, 1), (2, 1), (1, 2), (3, 3)] {
            let c = fpt_constants(k, t);
            let side = (2 * t + 2) as f64;
            let real = side * (1.0 + c.obs.to_f64().unwrap().sqrt());
            let w = c.wall.to_f64().unwrap();
            assert!(w >= real - 1e-9 && w - 1.0 < real, "k={k} t={t}: {w} vs {real}");
        }
    }

    #[test]
    fn small_tw_bound_is_exact_and_s_k() {
        let c = fpt_constants(0, 0);
        assert_eq!(c.wall, BigUint::from(2u32));
        assert_eq!(c.tw_bound.exponent, BigUint::from(2048u32));
        assert_eq!(c.tw_bound.exact, Some(BigUint::from(20u32).pow(2048)));
        for k in 0..10 {
            assert_eq!(fpt_constants(k, 1).s_k, BigUint::from((1u32 << k) - 1));
        }
    }

    fn check_tiling(model: &WallModel, t: usize, expected: usize) -> Vec<WallObstruction> {
        let tiles = tile_obstructions(model, t).unwrap();
        assert_eq!(tiles.len(), expected);
        let mut seen = BTreeSet::new();
        for w in &tiles {
            assert!(w.vertices.iter().all(|v| seen.insert(*v)), "tiles overlap");
            assert!(is_wall_subdivision(&w.subgraph(), 2 * t + 2).is_some());
            assert!(w.survives_in(&model.host));
        }
        tiles
    }

    #[test]
    fn tiling_counts() {
        check_tiling(&WallModel::identity(8).unwrap(), 1, 4);
        check_tiling(&WallModel::identity(12).unwrap(), 1, 9);
        let whole = check_tiling(&WallModel::identity(4).unwrap(), 1, 1);
        assert_eq!(whole[0].vertices, WallModel::identity(4).unwrap().host.vertex_set());
        let (_, subdivided) = gen_wall_formula(8).unwrap();
        check_tiling(&subdivided, 1, 4);
        check_tiling(&subdivided, 0, 16);
        assert_eq!(
            tile_obstructions(&WallModel::identity(3).unwrap(), 1),
            Err(ObstructionError::ModelTooSmall { r: 3, needed: 4 })
        );
    }

    #[test]
    fn common_killers() {
        let inst = gen_shared_template_instance(1, 2, 5, 11).unwrap();
        let tiles = tile_obstructions(&inst.model, 1).unwrap();
        assert_eq!(common_external_killers(&inst.formula, &tiles), inst.z);
        let single = common_external_killers(&inst.formula, &tiles[..1]);
        assert_eq!(single, killer_set(&inst.formula, &tiles[0].vertices).external);

        // per-tile killers only: each extra variable lives inside one tile
        let (wall, model) = gen_wall_formula(8).unwrap();
        let tiles = tile_obstructions(&model, 1).unwrap();
        let mut lits: Vec<Vec<Literal>> = wall.clauses().iter().map(|c| c.literals().to_vec()).collect();
        for (i, w) in tiles.iter().enumerate() {
            let ids: Vec<u32> = w.vertices.iter().filter_map(|v| v.as_clause()).take(2).collect();
            let x = 100 + i as Var;
            lits[ids[0] as usize - 1].push(Literal::positive(x));
            lits[ids[1] as usize - 1].push(Literal::negative(x));
        }
        let clauses = wall.clauses().iter().zip(lits).map(|(c, l)| Clause::new(c.id(), l).unwrap()).collect();
        let f = CnfFormula::new(0, clauses, BTreeSet::new()).unwrap();
        assert_eq!(common_external_killers(&f, &tiles[..1]), BTreeSet::from([100]));
        assert!(common_external_killers(&f, &tiles).is_empty());
        assert!(common_external_killers(&f, &[]).is_empty());
    }

    /// A star: variable 1 joined to three clauses, with nb(0) = 32 extra
    /// variables positive in clause 1 and negative in clause 2.
    fn star() -> (CnfFormula, WallObstruction, BTreeSet<Var>) {
        let z: BTreeSet<Var> = (2..34).collect();
        let c1 = std::iter::once(1).chain(z.iter().map(|&x| x as i64));
        let c2 = std::iter::once(1).chain(z.iter().map(|&x| -(x as i64)));
        let f = CnfFormula::from_clauses(vec![c1.collect::<Vec<_>>(), c2.collect(), vec![1]]).unwrap();
        let vertices = BTreeSet::from([Vertex::Var(1), Vertex::Clause(1), Vertex::Clause(2), Vertex::Clause(3)]);
        let edges = (1..=3).map(|c| (Vertex::Var(1), Vertex::Clause(c))).collect();
        (f, WallObstruction { vertices, edges, r: 0, branch: BTreeMap::new() }, z)
    }

    #[test]
    fn star_gives_one_region_and_one_q() {
        let (f, w, z) = star();
        let ot = build_template(&f, &w, &z, 0).unwrap();
        assert_eq!(ot.regions, vec![w.vertices.clone()]);
        assert_eq!(ot.q, vec![QVertex { region: 0, neighbors: z.clone() }]);
        assert_eq!(ot.q[0].neighbors.len(), nb(0));
        assert!(validate_template(&f, &ot).all_hold());
    }

    #[test]
    fn template_errors() {
        let (f, w, mut z) = star();
        assert_eq!(build_template(&f, &w, &BTreeSet::new(), 0), Err(ObstructionError::EmptyZ));
        z.insert(500);
        assert_eq!(build_template(&f, &w, &z, 0), Err(ObstructionError::NotAdjacent(500)));
    }

    #[test]
    fn constructed_violations_are_reported() {
        let (f, w, z) = star();
        let ot = build_template(&f, &w, &z, 0).unwrap();

        let mut isolated = ot.clone();
        isolated.z.insert(99);
        let report = validate_template(&f, &isolated);
        assert_eq!(report.violations, vec![TemplateViolation::DegreeZ { z: 99 }]);

        let mut thin = ot.clone();
        thin.q[0].neighbors.remove(&2);
        let report = validate_template(&f, &thin);
        assert!(!report.holds(4));
        assert!(report.violations.contains(&TemplateViolation::DegreeQw { q: 0, degree: nb(0) - 1 }));

        let mut stray = ot.clone();
        stray.q[0].neighbors.insert(1);
        assert!(!validate_template(&f, &stray).holds(1));

        let mut split = ot;
        split.regions = vec![BTreeSet::from([Vertex::Clause(1), Vertex::Clause(2)]), BTreeSet::from([Vertex::Var(1), Vertex::Clause(3)])];
        assert!(!validate_template(&f, &split).holds(0));
    }

    fn instance_template(t: usize, z_count: usize, seed: u64) -> (CnfFormula, ObstructionTemplate) {
        let inst = gen_template_instance(t, z_count, seed).unwrap();
        let w = tile_obstructions(&inst.model, t).unwrap().remove(0);
        assert_eq!(common_external_killers(&inst.formula, std::slice::from_ref(&w)), inst.z);
        let ot = build_template(&inst.formula, &w, &inst.z, t).unwrap();
        (inst.formula, ot)
    }

    #[test]
    fn synthetic_templates_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in 0..30 {
            let t = seed as usize % 2;
            let z_count = rng.random_range(nb(t)..=4 * nb(t));
            let (f, ot) = instance_template(t, z_count, seed);
            let report = validate_template(&f, &ot);
            assert!(report.all_hold(), "seed {seed}: {:?}", report.violations);
            for q in &ot.q {
                assert!((ot.nb..=3 * ot.nb).contains(&q.neighbors.len()));
            }
        }
    }

    #[test]
    fn heavy_instances_split_into_several_regions() {
        let (f, ot) = instance_template(0, 4 * nb(0), 3);
        assert!(ot.regions.len() > 1);
        assert!(validate_template(&f, &ot).all_hold());
        let dump = serde_json::to_value(ot.dump(&validate_template(&f, &ot))).unwrap();
        assert_eq!(dump["properties"]["vulnerable_vertex"], true);
        assert_eq!(dump["regions"].as_array().unwrap().len(), ot.regions.len());
    }

    /// Whether some assignment of `b` satisfies no clause of `region`,
    /// i.e. every region vertex survives.
    fn region_survives(f: &CnfFormula, region: &BTreeSet<Vertex>, b: &[Var]) -> bool {
        (0u32..1 << b.len()).any(|mask| {
            let mut tau = Assignment::new();
            for (i, &x) in b.iter().enumerate() {
                tau.set(x, mask >> i & 1 == 1);
            }
            region.iter().filter_map(|v| v.as_clause()).all(|c| {
                !f.clause(c).unwrap().literals().iter().any(|l| tau.get(l.var()).is_some_and(|val| l.eval(val)))
            })
        })
    }

    #[test]
    fn vulnerable_vertices_are_killed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..10 {
            let (f, ot) = instance_template(seed as usize % 2, 2 * nb(seed as usize % 2), seed);
            for q in &ot.q {
                let region = &ot.regions[q.region];
                let pool: Vec<Var> = f
                    .vars()
                    .into_iter()
                    .filter(|x| !q.neighbors.contains(x) && !region.contains(&Vertex::Var(*x)))
                    .collect();
                for _ in 0..5 {
                    let size = rng.random_range(0..=10.min(pool.len()));
                    let b: Vec<Var> = rand::seq::index::sample(&mut rng, pool.len(), size).into_iter().map(|i| pool[i]).collect();
                    assert!(region_survives(&f, region, &b), "seed {seed}, B = {b:?}");
                }
            }
        }
    }

    fn manual(z: &BTreeSet<Var>, neighborhoods: &[Vec<Var>]) -> ObstructionTemplate {
        let (_, w, _) = star();
        ObstructionTemplate {
            obstruction: w.clone(),
            t: 0,
            nb: nb(0),
            z: z.clone(),
            q: neighborhoods.iter().map(|n| QVertex { region: 0, neighbors: n.iter().copied().collect() }).collect(),
            regions: vec![w.vertices],
        }
    }

    #[test]
    fn merging() {
        let z: BTreeSet<Var> = (1..=6).collect();
        let a = manual(&z, &[vec![1, 2]]);
        let b = manual(&z, &[vec![1, 2]]);
        assert_eq!(merge_and_dedupe(&[a.clone(), b]).unwrap().q.len(), 1);
        let c = manual(&z, &[vec![3, 4], vec![5, 6]]);
        assert_eq!(merge_and_dedupe(&[a.clone(), c]).unwrap().q.len(), 3);
        let other = manual(&BTreeSet::from([1]), &[vec![1]]);
        assert_eq!(merge_and_dedupe(&[a, other]), Err(ObstructionError::MismatchedZ));
    }

    #[test]
    fn merged_synthetic_templates_have_distinct_neighborhoods() {
        for seed in 0..5 {
            let inst = gen_shared_template_instance(0, 2, 3 * nb(0), seed).unwrap();
            let tiles = tile_obstructions(&inst.model, 0).unwrap();
            let z = common_external_killers(&inst.formula, &tiles);
            assert_eq!(z, inst.z);
            let templates: Vec<_> = tiles.iter().map(|w| build_template(&inst.formula, w, &z, 0).unwrap()).collect();
            let merged = merge_and_dedupe(&templates).unwrap();
            for (i, a) in merged.q.iter().enumerate() {
                for b in &merged.q[i + 1..] {
                    assert_ne!(a.neighbors, b.neighbors);
                }
            }
        }
    }

    fn merged(z: BTreeSet<Var>, neighborhoods: Vec<BTreeSet<Var>>) -> MergedTemplates {
        let q = neighborhoods.into_iter().enumerate().map(|(i, neighbors)| MergedQ { template: 0, index: i, neighbors }).collect();
        MergedTemplates { z, q }
    }

    #[test]
    fn rule_one() {
        let out = apply_rules(&merged(BTreeSet::from([1, 2, 3]), vec![]), 1, 1);
        assert_eq!(out.rule, Rule::FewCommonKillers);
        assert_eq!(out.s, BTreeSet::from([1, 2, 3]));
        let at_limit: BTreeSet<Var> = (1..=462).collect();
        assert_eq!(apply_rules(&merged(at_limit, vec![]), 1, 1).rule, Rule::FewCommonKillers);
    }

    #[test]
    fn rule_two_picks_smallest_shared_neighborhood() {
        let z: BTreeSet<Var> = (1..=463).collect();
        let l: BTreeSet<Var> = (10..87).collect();
        let l2: BTreeSet<Var> = (20..97).collect();
        let mut hoods = vec![l2.clone(); 3];
        hoods.extend(vec![l.clone(); 3]);
        hoods.push((200..277).collect());
        hoods.push(l.clone());
        let out = apply_rules(&merged(z.clone(), hoods), 1, 1);
        assert_eq!(out.rule, Rule::MultipleNeighborhoods);
        assert_eq!(out.s, l);
        assert_eq!(out.sharers, vec![3, 4, 5, 7]);
        let below = apply_rules(&merged(z, vec![l.clone(), l]), 1, 1);
        assert_eq!(below.rule, Rule::NoMultipleNeighborhoods);
    }

    #[test]
    fn rule_three_takes_top_degrees() {
        let limit = 6 * nb(1);
        let n = limit as Var + 5;
        let z: BTreeSet<Var> = (1..=n).collect();
        // q_j = {z_i : i ≥ j}, so z_i has degree i
        let hoods = (1..=n).map(|j| (j..=n).collect()).collect();
        let out = apply_rules(&merged(z, hoods), 1, 1);
        assert_eq!(out.rule, Rule::NoMultipleNeighborhoods);
        assert_eq!(out.s, (6..=n).collect());

        // equal degrees: smallest ids win
        let z: BTreeSet<Var> = (1..=n).collect();
        let out = apply_rules(&merged(z, vec![(1..=n).collect()]), 1, 1);
        assert_eq!(out.s, (1..=limit as Var).collect());
    }

    #[test]
    fn rules_are_deterministic() {
        let inst = gen_shared_template_instance(0, 2, 3 * nb(0), 4).unwrap();
        let tiles = tile_obstructions(&inst.model, 0).unwrap();
        let templates: Vec<_> = tiles.iter().map(|w| build_template(&inst.formula, w, &inst.z, 0).unwrap()).collect();
        let m = MergedTemplates::union(&templates).unwrap();
        assert_eq!(apply_rules(&m, 1, 0), apply_rules(&m.clone(), 1, 0));
    }

    #[test]
    fn single_guess_and_enumeration() {
        let inst = gen_shared_template_instance(1, 2, 3, 2).unwrap();
        let tiles = tile_obstructions(&inst.model, 1).unwrap();
        let guess = Guess { internal: vec![0], shared: vec![1, 2, 3], ell: 1 };
        let out = evaluate_guess(&inst.formula, &tiles, &guess, 1, 1).unwrap();
        assert_eq!(out.z, inst.z);
        assert_eq!(out.rule.rule, Rule::FewCommonKillers);
        assert_eq!(out.rule.s, inst.z);
        let bad = Guess { internal: vec![1], shared: vec![1], ell: 1 };
        assert!(matches!(evaluate_guess(&inst.formula, &tiles, &bad, 1, 1), Err(ObstructionError::InvalidGuess(_))));

        let all: Vec<Guess> = GuessEnumeration::new(4, 1, 2).collect();
        assert_eq!(all.len(), 4 * 3);
        assert_eq!(all[0], Guess { internal: vec![0], shared: vec![1, 2], ell: 1 });
        assert_eq!(GuessEnumeration::new(5, 2, 2).count(), 10 * 3 * 2);
    }

    #[test]
    fn heavy_guess_builds_templates() {
        let inst = gen_shared_template_instance(0, 2, 7 * nb(0), 8).unwrap();
        let tiles = tile_obstructions(&inst.model, 0).unwrap();
        let guess = Guess { internal: vec![], shared: vec![0, 1, 2, 3], ell: 1 };
        let out = evaluate_guess(&inst.formula, &tiles, &guess, 1, 0).unwrap();
        assert_eq!(out.templates.len(), 4);
        assert!(out.templates.iter().all(|ot| validate_template(&inst.formula, ot).all_hold()));
        assert_ne!(out.rule.rule, Rule::FewCommonKillers);
        assert!(out.rule.s.is_subset(&inst.z));
    }

    #[test]
    fn provider_finds_the_shared_killer() {
        let (wall, model) = gen_wall_formula(4).unwrap();
        let x = 17;
        let clauses = wall
            .clauses()
            .iter()
            .map(|c| {
                let pol = if c.id() % 2 == 0 { Polarity::Positive } else { Polarity::Negative };
                Clause::new(c.id(), c.literals().iter().copied().chain([Literal::new(x, pol)])).unwrap()
            })
            .collect();
        let f = CnfFormula::new(0, clauses, BTreeSet::new()).unwrap();
        let provider = ObstructionProvider { model: WallModel { host: Graph::incidence(&f), ..model } };
        let cands = provider.candidates(&f, 1, 1, 48).unwrap();
        assert_eq!(cands.len(), 17);
        assert_eq!(cands.last(), Some(&x));
        let config = ApproxConfig { tw_threshold: 1, ..ApproxConfig::default() };
        match approx_backdoor(&f, 1, 1, config, &provider).unwrap() {
            ApproxOutcome::Found(report) => assert!(report.backdoor.len() <= 1 && report.is_valid()),
            other => panic!("expected a backdoor, got {other:?}"),
        }
    }
}
