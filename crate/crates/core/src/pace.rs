//! PACE text formats: `.gr` graphs (with a JSON id map for typed
//! vertices) and `.td` tree decompositions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, Vertex};
use crate::treewidth::TreeDecomposition;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PaceError {
    #[error("missing \"p {0}\" header")]
    MissingHeader(&'static str),
    #[error("line {line}: malformed input: {text}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: vertex {id} outside 1..={n}")]
    IdOutOfRange { line: usize, id: usize, n: usize },
    #[error("header declares {declared} {what} but {found} were read")]
    CountMismatch { what: &'static str, declared: usize, found: usize },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
    #[error("id map has {map} vertices but the file declares {file}")]
    IdMapSize { map: usize, file: usize },
}

/// Contiguous 1-based ids for the vertices of a graph, in vertex order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMap {
    pub vertices: Vec<Vertex>,
}

impl IdMap {
    pub fn for_graph(g: &Graph) -> Self {
        IdMap { vertices: g.vertices().collect() }
    }

    /// Plain(1), ..., Plain(n).
    pub fn plain(n: usize) -> Self {
        IdMap { vertices: (1..=n as u32).map(Vertex::Plain).collect() }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: usize) -> Option<Vertex> {
        id.checked_sub(1).and_then(|i| self.vertices.get(i)).copied()
    }

    pub fn ids(&self) -> BTreeMap<Vertex, usize> {
        self.vertices.iter().enumerate().map(|(i, &v)| (v, i + 1)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("id map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// `p tw <n> <m>` followed by one `u v` line per edge (u < v).
pub fn write_gr(g: &Graph) -> (String, IdMap) {
    let map = IdMap::for_graph(g);
    let ids = map.ids();
    let mut out = format!("p tw {} {}\n", g.vertex_count(), g.edge_count());
    for (u, v) in g.edges() {
        writeln!(out, "{} {}", ids[&u], ids[&v]).unwrap();
    }
    (out, map)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('c'))
}

fn numbers(line: &str, line_no: usize) -> Result<Vec<usize>, PaceError> {
    line.split_whitespace()
        .map(|t| t.parse().map_err(|_| PaceError::Malformed { line: line_no, text: line.to_string() }))
        .collect()
}

/// Reads a `.gr` file. Without an id map the vertices are Plain(1..=n).
pub fn read_gr(text: &str, map: Option<&IdMap>) -> Result<Graph, PaceError> {
    let mut lines = data_lines(text);
    let (hline, header) = lines.next().ok_or(PaceError::MissingHeader("tw"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "p" || parts[1] != "tw" {
        return Err(PaceError::MissingHeader("tw"));
    }
    let bad = || PaceError::Malformed { line: hline, text: header.to_string() };
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    let m: usize = parts[3].parse().map_err(|_| bad())?;
    let owned;
    let map = match map {
        Some(m) if m.len() != n => return Err(PaceError::IdMapSize { map: m.len(), file: n }),
        Some(m) => m,
        None => {
            owned = IdMap::plain(n);
            &owned
        }
    };
    let mut g = Graph::new();
    for &v in &map.vertices {
        g.add_vertex(v);
    }
    let mut found = 0;
    for (line_no, line) in lines {
        let nums = numbers(line, line_no)?;
        if nums.len() != 2 {
            return Err(PaceError::Malformed { line: line_no, text: line.to_string() });
        }
        let mut ends = [Vertex::Plain(0); 2];
        for (slot, &id) in ends.iter_mut().zip(&nums) {
            *slot = map.vertex(id).ok_or(PaceError::IdOutOfRange { line: line_no, id, n })?;
        }
        g.add_edge(ends[0], ends[1]).map_err(|source| PaceError::Graph { line: line_no, source })?;
        found += 1;
    }
    if found != m {
        return Err(PaceError::CountMismatch { what: "edges", declared: m, found });
    }
    Ok(g)
}

/// PACE 2017 `.td`: `s td <#bags> <width+1> <#vertices>`, then bag lines
/// `b <i> <v...>` and tree edges `<i> <j>`, all 1-based.
pub fn write_td(td: &TreeDecomposition, map: &IdMap) -> String {
    let ids = map.ids();
    let max_bag = td.bags().iter().map(BTreeSet::len).max().unwrap_or(0);
    let mut out = format!("s td {} {} {}\n", td.len(), max_bag, map.len());
    for (i, bag) in td.bags().iter().enumerate() {
        let mut members: Vec<usize> = bag.iter().map(|v| ids[v]).collect();
        members.sort_unstable();
        write!(out, "b {}", i + 1).unwrap();
        for id in members {
            write!(out, " {id}").unwrap();
        }
        out.push('\n');
    }
    for &(a, b) in td.edges() {
        writeln!(out, "{} {}", a + 1, b + 1).unwrap();
    }
    out
}

/// Reads a `.td` file back, resolving vertex ids through `map`.
pub fn read_td(text: &str, map: &IdMap) -> Result<TreeDecomposition, PaceError> {
    let mut lines = data_lines(text);
    let (hline, header) = lines.next().ok_or(PaceError::MissingHeader("td"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "s" || parts[1] != "td" {
        return Err(PaceError::MissingHeader("td"));
    }
    let nums = numbers(&parts[2..].join(" "), hline)?;
    let (nbags, nverts) = (nums[0], nums[2]);
    if nverts != map.len() {
        return Err(PaceError::IdMapSize { map: map.len(), file: nverts });
    }
    let mut bags: Vec<Option<BTreeSet<Vertex>>> = vec![None; nbags];
    let mut edges = Vec::new();
    for (line_no, line) in lines {
        let malformed = || PaceError::Malformed { line: line_no, text: line.to_string() };
        if let Some(rest) = line.strip_prefix('b') {
            let nums = numbers(rest, line_no)?;
            let (&i, members) = nums.split_first().ok_or_else(malformed)?;
            if i == 0 || i > nbags || bags[i - 1].is_some() {
                return Err(malformed());
            }
            let mut bag = BTreeSet::new();
            for &id in members {
                bag.insert(map.vertex(id).ok_or(PaceError::IdOutOfRange { line: line_no, id, n: nverts })?);
            }
            bags[i - 1] = Some(bag);
        } else {
            let nums = numbers(line, line_no)?;
            if nums.len() != 2 || nums.iter().any(|&x| x == 0 || x > nbags) {
                return Err(malformed());
            }
            edges.push((nums[0] - 1, nums[1] - 1));
        }
    }
    let found = bags.iter().filter(|b| b.is_some()).count();
    if found != nbags {
        return Err(PaceError::CountMismatch { what: "bags", declared: nbags, found });
    }
    Ok(TreeDecomposition::new(bags.into_iter().map(Option::unwrap).collect(), edges))
}
