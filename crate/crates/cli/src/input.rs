//! Reading inputs and classifying failures into exit codes.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};

use sbtw_core::formula::{parse_dimacs, CnfFormula};
use sbtw_core::graph::Graph;
use sbtw_core::pace::{read_gr, IdMap};

use crate::{exit, InputArgs, InputFormat};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        CliError { code, error: error.into() }
    }

    pub fn parse(error: impl Into<anyhow::Error>) -> Self {
        Self::new(exit::PARSE, error)
    }

    pub fn other(error: impl Into<anyhow::Error>) -> Self {
        Self::new(1, error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub enum Input {
    Formula(CnfFormula),
    Graph { graph: Graph, map: IdMap },
}

impl Input {
    pub fn formula(self) -> CliResult<CnfFormula> {
        match self {
            Input::Formula(f) => Ok(f),
            Input::Graph { .. } => Err(CliError::parse(anyhow!("this command needs a DIMACS CNF input"))),
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).context("reading stdin").map_err(CliError::other)?;
        return Ok(text);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::other)
}

/// The first header token pair that is not a comment, e.g. ("p", "cnf").
fn sniff(text: &str) -> Option<InputFormat> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('c'))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some("p"), Some("cnf")) => Some(InputFormat::Dimacs),
        (Some("p"), Some("tw")) => Some(InputFormat::Gr),
        _ => None,
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".map.json");
    PathBuf::from(name)
}

pub fn load(args: &InputArgs) -> CliResult<Input> {
    let text = read_text(&args.path)?;
    let format = match args.format {
        InputFormat::Auto => sniff(&text).unwrap_or(InputFormat::Dimacs),
        other => other,
    };
    match format {
        InputFormat::Gr => {
            let map_path = args.map.clone().or_else(|| Some(sidecar(&args.path)).filter(|p| p.exists()));
            let map = match &map_path {
                Some(p) => {
                    let json = fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).map_err(CliError::other)?;
                    Some(IdMap::from_json(&json).with_context(|| format!("parsing {}", p.display())).map_err(CliError::parse)?)
                }
                None => None,
            };
            let graph = read_gr(&text, map.as_ref()).with_context(|| format!("parsing {}", args.path.display())).map_err(CliError::parse)?;
            let map = map.unwrap_or_else(|| IdMap::for_graph(&graph));
            log::info!("read graph with {} vertices and {} edges", graph.vertex_count(), graph.edge_count());
            Ok(Input::Graph { graph, map })
        }
        _ => {
            let f = parse_dimacs(&text).with_context(|| format!("parsing {}", args.path.display())).map_err(CliError::parse)?;
            log::info!("read formula with {} variables and {} clauses", f.all_vars().len(), f.clauses().len());
            Ok(Input::Formula(f))
        }
    }
}

pub fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(CliError::other),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn print_json(value: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::other)?;
    println!("{text}");
    Ok(())
}

pub fn default_sidecar(path: &Path) -> PathBuf {
    sidecar(path)
}
