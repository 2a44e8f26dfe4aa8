//! Seeded instance families: grid formulas, planted backdoors, random CNF,
//! wall formulas and synthetic instances for the template construction.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Clause, ClauseId, CnfFormula, FormulaError, Literal, Polarity, Var};
use crate::graph::{wall_edges, Coord, Graph, Vertex, WallModel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("clause width {width} exceeds the {n} available variables")]
    WidthTooLarge { width: usize, n: usize },
    #[error("wall size must be at least 2, got {0}")]
    WallTooSmall(usize),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// F_n, optionally with x, plus the clause ids of each orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridInstance {
    pub n: usize,
    pub formula: CnfFormula,
    pub horizontal: Vec<ClauseId>,
    pub vertical: Vec<ClauseId>,
    pub x: Option<Var>,
}

/// Variable of grid cell (i, j), both 1-based.
pub fn grid_var(n: usize, i: usize, j: usize) -> Var {
    ((i - 1) * n + j) as Var
}

fn grid(n: usize, with_x: bool) -> Result<GridInstance, GenError> {
    if n < 2 {
        return Err(GenError::GridTooSmall(n));
    }
    let x = (n * n + 1) as Var;
    let mut clauses = Vec::new();
    let (mut horizontal, mut vertical) = (Vec::new(), Vec::new());
    let mut push = |a: Var, b: Var, x_lit: Option<Literal>, ids: &mut Vec<ClauseId>| -> Result<(), GenError> {
        let id = clauses.len() as ClauseId + 1;
        let lits = [Literal::positive(a), Literal::positive(b)].into_iter().chain(x_lit);
        clauses.push(Clause::new(id, lits)?);
        ids.push(id);
        Ok(())
    };
    for i in 1..=n {
        for j in 1..=n {
            if j < n {
                push(grid_var(n, i, j), grid_var(n, i, j + 1), with_x.then(|| Literal::positive(x)), &mut horizontal)?;
            }
            if i < n {
                push(grid_var(n, i, j), grid_var(n, i + 1, j), with_x.then(|| Literal::negative(x)), &mut vertical)?;
            }
        }
    }
    let formula = CnfFormula::new(if with_x { x } else { x - 1 }, clauses, BTreeSet::new())?;
    Ok(GridInstance { n, formula, horizontal, vertical, x: with_x.then_some(x) })
}

/// The n×n grid with a positive binary clause per grid edge.
pub fn gen_grid(n: usize) -> Result<GridInstance, GenError> {
    grid(n, false)
}

/// The grid plus x = n²+1, positive in horizontal and negative in
/// vertical clauses.
pub fn gen_grid_x(n: usize) -> Result<GridInstance, GenError> {
    grid(n, true)
}

pub fn gen_grid_formula(n: usize) -> Result<CnfFormula, GenError> {
    Ok(gen_grid(n)?.formula)
}

pub fn gen_grid_formula_x(n: usize) -> Result<CnfFormula, GenError> {
    Ok(gen_grid_x(n)?.formula)
}

/// m clauses over `width` distinct variables of 1..=n with uniform signs.
/// Declared variables that occur nowhere are free.
pub fn gen_random_cnf(n: usize, m: usize, width: usize, seed: u64) -> Result<CnfFormula, GenError> {
    if width > n && m > 0 {
        return Err(GenError::WidthTooLarge { width, n });
    }
    let mut rng = rng(seed);
    let mut clauses = Vec::with_capacity(m);
    for id in 1..=m {
        let lits: Vec<Literal> = index::sample(&mut rng, n, width)
            .into_iter()
            .map(|v| Literal::new(v as Var + 1, if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative }))
            .collect();
        clauses.push(Clause::new(id as ClauseId, lits)?);
    }
    let used: BTreeSet<Var> = clauses.iter().flat_map(|c| c.vars().collect::<Vec<_>>()).collect();
    let free = (1..=n as Var).filter(|v| !used.contains(v)).collect();
    Ok(CnfFormula::new(n as Var, clauses, free)?)
}

/// A formula with incidence treewidth ≤ max(t, 1): the bipartite part of
/// a random t-tree over `base_n` variable and `base_n` clause vertices.
/// Clauses without variables are dropped and variables are renumbered
/// densely.
pub fn gen_bounded_tw(base_n: usize, t: usize, seed: u64) -> Result<CnfFormula, GenError> {
    let mut rng = rng(seed);
    let width = t.max(1);
    let total = 2 * base_n;
    let mut is_var: Vec<bool> = (0..total).map(|i| i < base_n).collect();
    is_var.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    // t-cliques available for attachment
    let seed_clique: Vec<usize> = (0..width.min(total)).collect();
    for (a, &u) in seed_clique.iter().enumerate() {
        for &w in &seed_clique[..a] {
            edges.push((w, u));
        }
    }
    let mut cliques = vec![seed_clique];
    for v in width.min(total)..total {
        let c = cliques[rng.random_range(0..cliques.len())].clone();
        for &u in &c {
            edges.push((u, v));
        }
        for skip in 0..c.len() {
            let mut next: Vec<usize> = c.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &u)| u).collect();
            next.push(v);
            cliques.push(next);
        }
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (a, b) in edges {
        match (is_var[a], is_var[b]) {
            (true, false) => members.entry(b).or_default().push(a),
            (false, true) => members.entry(a).or_default().push(b),
            _ => {}
        }
    }
    let mut rename: BTreeMap<usize, Var> = BTreeMap::new();
    let mut clauses = Vec::new();
    for (_, vars) in members {
        let mut lits = Vec::with_capacity(vars.len());
        for v in vars {
            let next = rename.len() as Var + 1;
            let var = *rename.entry(v).or_insert(next);
            let pol = if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            lits.push(Literal::new(var, pol));
        }
        clauses.push(Clause::new(clauses.len() as ClauseId + 1, lits)?);
    }
    Ok(CnfFormula::new(rename.len() as Var, clauses, BTreeSet::new())?)
}

/// A bounded-treewidth base formula plus k fresh variables, each added
/// positively to one random clause subset and negatively to a disjoint
/// one. Deleting the planted variables gives back the base formula, so
/// the planted set is a deletion backdoor and hence a strong one. A planted
/// variable that lands in no clause stays declared but free, and is left
/// out of the returned set.
pub fn gen_planted(base_n: usize, t: usize, k: usize, seed: u64) -> Result<(CnfFormula, BTreeSet<Var>), GenError> {
    let base = gen_bounded_tw(base_n, t, seed)?;
    if k == 0 {
        return Ok((base, BTreeSet::new()));
    }
    let mut rng = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let first = base.num_vars_declared() + 1;
    let planted: BTreeSet<Var> = (first..first + k as Var).collect();
    let mut lits: Vec<Vec<Literal>> = base.clauses().iter().map(|c| c.literals().to_vec()).collect();
    for &x in &planted {
        for clause in lits.iter_mut() {
            let roll: f64 = rng.random();
            if roll < 0.35 {
                clause.push(Literal::positive(x));
            } else if roll < 0.7 {
                clause.push(Literal::negative(x));
            }
        }
    }
    let clauses = base
        .clauses()
        .iter()
        .zip(lits)
        .map(|(c, l)| Clause::new(c.id(), l))
        .collect::<Result<Vec<_>, _>>()?;
    let used: BTreeSet<Var> = clauses.iter().flat_map(|c| c.vars().collect::<Vec<_>>()).collect();
    let (occurring, free): (BTreeSet<Var>, BTreeSet<Var>) = planted.iter().partition(|x| used.contains(x));
    let f = CnfFormula::new(first + k as Var - 1, clauses, free)?;
    Ok((f, occurring))
}

/// Variable of wall vertex (i, j), row-major from 1.
pub fn wall_var(r: usize, (i, j): Coord) -> Var {
    ((i - 1) * r + j) as Var
}

/// One positive binary clause per edge of W_r, with the model of W_r in
/// the incidence graph (each wall edge becomes var–clause–var).
pub fn gen_wall_formula(r: usize) -> Result<(CnfFormula, WallModel), GenError> {
    if r < 2 {
        return Err(GenError::WallTooSmall(r));
    }
    let mut clauses = Vec::new();
    let mut paths = BTreeMap::new();
    for (id, (a, b)) in wall_edges(r).into_iter().enumerate() {
        let id = id as ClauseId + 1;
        let (va, vb) = (wall_var(r, a), wall_var(r, b));
        clauses.push(Clause::new(id, [Literal::positive(va), Literal::positive(vb)])?);
        paths.insert((a, b), vec![Vertex::Var(va), Vertex::Clause(id), Vertex::Var(vb)]);
    }
    let f = CnfFormula::new((r * r) as Var, clauses, BTreeSet::new())?;
    let branch = (1..=r).flat_map(|i| (1..=r).map(move |j| (i, j))).map(|c| (c, Vertex::Var(wall_var(r, c)))).collect();
    let model = WallModel { host: Graph::incidence(&f), r, branch, paths };
    Ok((f, model))
}

/// A wall formula together with extra variables that externally kill
/// every tiled (2t+2)-block of the wall.
#[derive(Debug, Clone)]
pub struct TemplateInstance {
    pub t: usize,
    pub formula: CnfFormula,
    pub model: WallModel,
    pub z: BTreeSet<Var>,
}

/// A (2t+2)-wall formula with `z_count` extra variables, each positive in
/// one wall clause and negative in a different one.
pub fn gen_template_instance(t: usize, z_count: usize, seed: u64) -> Result<TemplateInstance, GenError> {
    gen_shared_template_instance(t, 1, z_count, seed)
}

/// A wall of `blocks`×`blocks` tiles of side 2t+2. Every extra variable
/// occurs positively in one clause and negatively in another clause of
/// each tile, so it is a common external killer of all tiles.
pub fn gen_shared_template_instance(
    t: usize,
    blocks: usize,
    z_count: usize,
    seed: u64,
) -> Result<TemplateInstance, GenError> {
    let side = 2 * t + 2;
    let r = side * blocks.max(1);
    let (wall, mut model) = gen_wall_formula(r)?;
    let mut rng = rng(seed);
    let tile = |(i, j): Coord| ((i - 1) / side, (j - 1) / side);
    let mut per_tile: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (idx, (a, b)) in wall_edges(r).into_iter().enumerate() {
        if tile(a) == tile(b) {
            per_tile.entry(tile(a)).or_default().push(idx);
        }
    }
    let mut lits: Vec<Vec<Literal>> = wall.clauses().iter().map(|c| c.literals().to_vec()).collect();
    let first = (r * r) as Var + 1;
    let z: BTreeSet<Var> = (first..first + z_count as Var).collect();
    for &x in &z {
        for members in per_tile.values() {
            let picks = index::sample(&mut rng, members.len(), 2);
            lits[members[picks.index(0)]].push(Literal::positive(x));
            lits[members[picks.index(1)]].push(Literal::negative(x));
        }
    }
    let clauses = wall
        .clauses()
        .iter()
        .zip(lits)
        .map(|(c, l)| Clause::new(c.id(), l))
        .collect::<Result<Vec<_>, _>>()?;
    let formula = CnfFormula::new(first + z_count as Var - 1, clauses, BTreeSet::new())?;
    model.host = Graph::incidence(&formula);
    Ok(TemplateInstance { t, formula, model, z })
}
