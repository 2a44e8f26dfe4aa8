//! Graph isomorphism by color refinement with backtracking on ties.
//! Meant for the small graphs this crate produces (walls, obstructions).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{Graph, Vertex};

/// Stable colors of both graphs under joint 1-dimensional refinement.
fn refine(g: &[Vec<usize>], h: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let mut cg: Vec<usize> = g.iter().map(Vec::len).collect();
    let mut ch: Vec<usize> = h.iter().map(Vec::len).collect();
    let mut classes = 0;
    loop {
        let mut palette: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let signature = |colors: &[usize], adj: &[Vec<usize>], v: usize| {
            let mut nb: Vec<usize> = adj[v].iter().map(|&u| colors[u]).collect();
            nb.sort_unstable();
            (colors[v], nb)
        };
        let sg: Vec<_> = (0..g.len()).map(|v| signature(&cg, g, v)).collect();
        let sh: Vec<_> = (0..h.len()).map(|v| signature(&ch, h, v)).collect();
        let mut keys: Vec<&(usize, Vec<usize>)> = sg.iter().chain(sh.iter()).collect();
        keys.sort();
        keys.dedup();
        for (i, k) in keys.into_iter().enumerate() {
            palette.insert(k.clone(), i);
        }
        cg = sg.iter().map(|s| palette[s]).collect();
        ch = sh.iter().map(|s| palette[s]).collect();
        if palette.len() == classes {
            return (cg, ch);
        }
        classes = palette.len();
    }
}

/// A bijection V(g) → V(h) preserving adjacency, if one exists.
pub fn find_isomorphism(g: &Graph, h: &Graph) -> Option<BTreeMap<Vertex, Vertex>> {
    if g.vertex_count() != h.vertex_count() || g.edge_count() != h.edge_count() {
        return None;
    }
    let (gv, ga) = g.indexed();
    let (hv, ha) = h.indexed();
    let (cg, ch) = refine(&ga, &ha);
    let histogram = |c: &[usize]| {
        let mut m = BTreeMap::new();
        for &x in c {
            *m.entry(x).or_insert(0usize) += 1;
        }
        m
    };
    if histogram(&cg) != histogram(&ch) {
        return None;
    }

    let n = gv.len();
    let hsets: Vec<BTreeSet<usize>> = ha.iter().map(|a| a.iter().copied().collect()).collect();

    // Order: BFS from the vertex in the rarest class, so each vertex after
    // the first in a component has a mapped neighbor.
    let class_size = histogram(&cg);
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&v| (class_size[&cg[v]], v));
    for s in starts {
        if placed[s] {
            continue;
        }
        placed[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = ga[v].iter().copied().filter(|&u| !placed[u]).collect();
            next.sort_by_key(|&u| (class_size[&cg[u]], u));
            for u in next {
                placed[u] = true;
                queue.push_back(u);
            }
        }
    }

    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let gsets: Vec<BTreeSet<usize>> = ga.iter().map(|a| a.iter().copied().collect()).collect();

    #[allow(clippy::too_many_arguments)]
    fn search(
        depth: usize,
        order: &[usize],
        cg: &[usize],
        ch: &[usize],
        gsets: &[BTreeSet<usize>],
        hsets: &[BTreeSet<usize>],
        image: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let v = order[depth];
        let mapped_nb = gsets[v].iter().find(|&&u| image[u] != usize::MAX).copied();
        let candidates: Vec<usize> = match mapped_nb {
            Some(u) => hsets[image[u]].iter().copied().collect(),
            None => (0..ch.len()).collect(),
        };
        'cand: for w in candidates {
            if used[w] || ch[w] != cg[v] {
                continue;
            }
            for &u in &order[..depth] {
                if gsets[v].contains(&u) != hsets[w].contains(&image[u]) {
                    continue 'cand;
                }
            }
            image[v] = w;
            used[w] = true;
            if search(depth + 1, order, cg, ch, gsets, hsets, image, used) {
                return true;
            }
            image[v] = usize::MAX;
            used[w] = false;
        }
        false
    }

    if !search(0, &order, &cg, &ch, &gsets, &hsets, &mut image, &mut used) {
        return None;
    }
    Some((0..n).map(|v| (gv[v], hv[image[v]])).collect())
}

pub fn is_isomorphic(g: &Graph, h: &Graph) -> bool {
    find_isomorphism(g, h).is_some()
}
