//! r-walls, topological wall models and wall-subdivision recognition.

use std::collections::{BTreeMap, BTreeSet};

use super::{Graph, GraphError, Vertex};

/// Wall coordinates (i, j), both 1-based.
pub type Coord = (usize, usize);

/// The wall adjacency rule: (i,j) ~ (i',j') iff j' = j and i' = i ± 1, or
/// i' = i and j' = j + (-1)^(i+j).
pub fn wall_adjacent(a: Coord, b: Coord) -> bool {
    let (i, j) = (a.0 as i64, a.1 as i64);
    let (i2, j2) = (b.0 as i64, b.1 as i64);
    let step = if (i + j) % 2 == 0 { 1 } else { -1 };
    (j2 == j && (i2 == i - 1 || i2 == i + 1)) || (i2 == i && j2 == j + step)
}

/// Edges of W_r as ordered coordinate pairs.
pub fn wall_edges(r: usize) -> Vec<(Coord, Coord)> {
    let mut edges = Vec::new();
    for i in 1..=r {
        for j in 1..=r {
            if i < r {
                edges.push(((i, j), (i + 1, j)));
            }
            let step_up = (i + j) % 2 == 0;
            if step_up && j < r {
                edges.push(((i, j), (i, j + 1)));
            }
        }
    }
    edges
}

pub fn wall_vertex(r: usize, (i, j): Coord) -> Vertex {
    Vertex::Plain(((i - 1) * r + j) as u32)
}

/// Positions of wall vertices inside some graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WallCoordinates {
    pub r: usize,
    pub positions: BTreeMap<Vertex, Coord>,
}

impl WallCoordinates {
    pub fn vertex_at(&self, coord: Coord) -> Option<Vertex> {
        self.positions.iter().find(|(_, &c)| c == coord).map(|(&v, _)| v)
    }

    pub fn by_coord(&self) -> BTreeMap<Coord, Vertex> {
        self.positions.iter().map(|(&v, &c)| (c, v)).collect()
    }
}

/// W_r on r² plain vertices numbered row-major from 1.
pub fn make_wall(r: usize) -> Result<(Graph, WallCoordinates), GraphError> {
    if r < 2 {
        return Err(GraphError::WallTooSmall(r));
    }
    let mut g = Graph::new();
    let mut positions = BTreeMap::new();
    for i in 1..=r {
        for j in 1..=r {
            let v = wall_vertex(r, (i, j));
            g.add_vertex(v);
            positions.insert(v, (i, j));
        }
    }
    for (a, b) in wall_edges(r) {
        g.add_edge(wall_vertex(r, a), wall_vertex(r, b))?;
    }
    Ok((g, WallCoordinates { r, positions }))
}

/// A topological model of W_r in a host graph: a branch vertex per wall
/// vertex and an independent host path per wall edge.
#[derive(Debug, Clone)]
pub struct WallModel {
    pub host: Graph,
    pub r: usize,
    pub branch: BTreeMap<Coord, Vertex>,
    /// Keyed by the wall edge (a, b) with a < b; the path runs from
    /// branch[a] to branch[b] inclusive.
    pub paths: BTreeMap<(Coord, Coord), Vec<Vertex>>,
}

impl WallModel {
    /// W_r as a model of itself.
    pub fn identity(r: usize) -> Result<Self, GraphError> {
        let (host, coords) = make_wall(r)?;
        let branch = coords.by_coord();
        let paths = wall_edges(r)
            .into_iter()
            .map(|(a, b)| ((a, b), vec![branch[&a], branch[&b]]))
            .collect();
        Ok(WallModel { host, r, branch, paths })
    }

    /// Checks that every wall edge has a host path between the right
    /// branch vertices and that the paths are independent.
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::InvalidWallModel(m));
        if self.branch.len() != self.r * self.r {
            return bad(format!("expected {} branch vertices, got {}", self.r * self.r, self.branch.len()));
        }
        let branch_set: BTreeSet<Vertex> = self.branch.values().copied().collect();
        if branch_set.len() != self.branch.len() {
            return bad("branch vertices are not distinct".into());
        }
        let expected: BTreeSet<(Coord, Coord)> = wall_edges(self.r).into_iter().collect();
        let got: BTreeSet<(Coord, Coord)> = self.paths.keys().copied().collect();
        if expected != got {
            return bad("paths do not match the wall edges".into());
        }
        let mut interiors = BTreeSet::new();
        for (&(a, b), path) in &self.paths {
            if path.len() < 2 || path[0] != self.branch[&a] || path[path.len() - 1] != self.branch[&b] {
                return bad(format!("path for {a:?}-{b:?} has wrong endpoints"));
            }
            for w in path.windows(2) {
                if !self.host.has_edge(w[0], w[1]) {
                    return bad(format!("host lacks edge {}-{}", w[0], w[1]));
                }
            }
            for &v in &path[1..path.len() - 1] {
                if branch_set.contains(&v) || !interiors.insert(v) {
                    return bad(format!("paths are not independent at {v}"));
                }
            }
        }
        Ok(())
    }

    /// The subgraph of the host formed by all model paths.
    pub fn model_graph(&self) -> Graph {
        let mut g = Graph::new();
        for path in self.paths.values() {
            for w in path.windows(2) {
                g.add_edge(w[0], w[1]).expect("simple path");
            }
        }
        g
    }
}

/// Branch structure of a graph: vertices of degree other than 2, and the
/// maximal paths through degree-2 vertices joining them.
struct Core {
    nodes: Vec<Vertex>,
    index: BTreeMap<Vertex, usize>,
    /// (end a, end b, interior from a to b)
    paths: Vec<(usize, usize, Vec<Vertex>)>,
    pair_paths: BTreeMap<(usize, usize), Vec<usize>>,
    core_adj: Vec<BTreeSet<usize>>,
}

impl Core {
    fn of(g: &Graph) -> Option<Core> {
        let nodes: Vec<Vertex> = g.vertices().filter(|&v| g.degree(v) != 2).collect();
        let index: BTreeMap<Vertex, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut paths = Vec::new();
        let mut covered: BTreeSet<Vertex> = nodes.iter().copied().collect();
        for &u in &nodes {
            for first in g.neighbors(u) {
                let mut prev = u;
                let mut cur = first;
                let mut interior = Vec::new();
                while !index.contains_key(&cur) {
                    interior.push(cur);
                    let next = g.neighbors(cur).find(|&x| x != prev).expect("degree two");
                    prev = cur;
                    cur = next;
                }
                let last = *interior.last().unwrap_or(&u);
                if (u, first) <= (cur, last) {
                    covered.extend(interior.iter().copied());
                    paths.push((index[&u], index[&cur], interior));
                }
            }
        }
        if covered.len() != g.vertex_count() {
            // a component that is a bare cycle
            return None;
        }
        let mut pair_paths: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut core_adj = vec![BTreeSet::new(); nodes.len()];
        for (i, (a, b, _)) in paths.iter().enumerate() {
            pair_paths.entry(((*a).min(*b), (*a).max(*b))).or_default().push(i);
            core_adj[*a].insert(*b);
            core_adj[*b].insert(*a);
        }
        Some(Core { nodes, index, paths, pair_paths, core_adj })
    }

    fn lengths(&self, a: usize, b: usize) -> Vec<usize> {
        let mut l: Vec<usize> = self
            .pair_paths
            .get(&(a.min(b), a.max(b)))
            .map(|ps| ps.iter().map(|&p| self.paths[p].2.len()).collect())
            .unwrap_or_default();
        l.sort_unstable();
        l
    }
}

fn pair_compatible(pattern: &[usize], host: &[usize]) -> bool {
    pattern.len() == host.len() && pattern.iter().zip(host).all(|(p, h)| h >= p)
}

/// Whether `h` is a subdivision of W_r. On success returns the position of
/// each wall vertex in `h` (branch vertices plus one interior vertex per
/// wall subdivision vertex).
pub fn is_wall_subdivision(h: &Graph, r: usize) -> Option<WallCoordinates> {
    let (wall, wall_coords) = make_wall(r).ok()?;
    let wc = Core::of(&wall)?;
    let hc = Core::of(h)?;
    if wc.nodes.len() != hc.nodes.len() || wc.paths.len() != hc.paths.len() {
        return None;
    }
    let deg_w = |i: usize| wall.degree(wc.nodes[i]);
    let deg_h = |i: usize| h.degree(hc.nodes[i]);
    let mut dw: Vec<usize> = (0..wc.nodes.len()).map(deg_w).collect();
    let mut dh: Vec<usize> = (0..hc.nodes.len()).map(deg_h).collect();
    dw.sort_unstable();
    dh.sort_unstable();
    if dw != dh {
        return None;
    }

    // BFS order over the wall core
    let n = wc.nodes.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in &wc.core_adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }

    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    if !map_core(0, &order, &wc, &hc, &deg_w, &deg_h, &mut image, &mut used) {
        return None;
    }

    let mut positions = BTreeMap::new();
    for (wi, &hi) in image.iter().enumerate() {
        positions.insert(hc.nodes[hi], wall_coords.positions[&wc.nodes[wi]]);
    }
    for (&(a, b), wpaths) in &wc.pair_paths {
        let (ha, hb) = (image[a], image[b]);
        let mut hpaths = hc.pair_paths[&(ha.min(hb), ha.max(hb))].clone();
        let mut wpaths = wpaths.clone();
        hpaths.sort_by_key(|&p| hc.paths[p].2.len());
        wpaths.sort_by_key(|&p| wc.paths[p].2.len());
        for (&wp, &hp) in wpaths.iter().zip(&hpaths) {
            let (wa, _, winterior) = &wc.paths[wp];
            let (hstart, _, hinterior) = &hc.paths[hp];
            let mut hinterior = hinterior.clone();
            if *hstart != image[*wa] {
                hinterior.reverse();
            }
            for (wv, hv) in winterior.iter().zip(&hinterior) {
                positions.insert(*hv, wall_coords.positions[wv]);
            }
        }
    }
    Some(WallCoordinates { r, positions })
}

#[allow(clippy::too_many_arguments)]
fn map_core(
    depth: usize,
    order: &[usize],
    wc: &Core,
    hc: &Core,
    deg_w: &dyn Fn(usize) -> usize,
    deg_h: &dyn Fn(usize) -> usize,
    image: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    let anchor = wc.core_adj[v].iter().find(|&&u| image[u] != usize::MAX).copied();
    let candidates: Vec<usize> = match anchor {
        Some(u) => hc.core_adj[image[u]].iter().copied().collect(),
        None => (0..hc.nodes.len()).collect(),
    };
    'cand: for w in candidates {
        if used[w] || deg_h(w) != deg_w(v) {
            continue;
        }
        if !pair_compatible(&wc.lengths(v, v), &hc.lengths(w, w)) {
            continue;
        }
        for &u in &order[..depth] {
            if !pair_compatible(&wc.lengths(v, u), &hc.lengths(w, image[u])) {
                continue 'cand;
            }
        }
        image[v] = w;
        used[w] = true;
        if map_core(depth + 1, order, wc, hc, deg_w, deg_h, image, used) {
            return true;
        }
        image[v] = usize::MAX;
        used[w] = false;
    }
    let _ = &hc.index;
    false
}

/// The graph obtained by replacing every edge of `g` with a path of
/// `extra(u, v) + 1` edges through fresh plain vertices numbered from
/// `first_fresh`.
pub fn subdivide_edges(g: &Graph, first_fresh: u32, mut extra: impl FnMut(Vertex, Vertex) -> usize) -> Graph {
    let mut out = Graph::new();
    for v in g.vertices() {
        out.add_vertex(v);
    }
    let mut next = first_fresh;
    for (u, v) in g.edges() {
        let mut prev = u;
        for _ in 0..extra(u, v) {
            let w = Vertex::Plain(next);
            next += 1;
            out.add_edge(prev, w).expect("fresh vertex");
            prev = w;
        }
        out.add_edge(prev, v).expect("distinct endpoints");
    }
    out
}
